use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::numerics::ln_biguint;

/// Closed c-adic box ∏ [k_i c^{-g}, (k_i+1) c^{-g}].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClosedBox {
    pub g: u32,
    pub k: Vec<BigUint>,
}

pub(crate) fn pow_c(c: u32, e: u32) -> BigUint {
    BigUint::from(c).pow(e)
}

pub(crate) fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// ln of a positive rational.
pub(crate) fn ln_rational(x: &BigRational) -> f64 {
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    ln_biguint(n) - ln_biguint(d)
}

/// Nearest f64 of a rational in [0, 1]-ish ranges.
pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl ClosedBox {
    pub fn root(d: usize) -> Self {
        Self { g: 0, k: vec![BigUint::zero(); d] }
    }

    pub fn d(&self) -> usize {
        self.k.len()
    }

    pub fn side(&self, c: u32) -> BigRational {
        ratio(BigUint::one(), pow_c(c, self.g))
    }

    pub fn ln_side(&self, c: u32) -> f64 {
        -(self.g as f64) * (c as f64).ln()
    }

    pub fn corner(&self, c: u32) -> Vec<BigRational> {
        let den = pow_c(c, self.g);
        self.k.iter().map(|k| ratio(k.clone(), den.clone())).collect()
    }

    /// Corner rounded to f64.
    pub fn corner_f64(&self, c: u32) -> Vec<f64> {
        self.corner(c).iter().map(rational_to_f64).collect()
    }

    /// Whether `other` lies inside this box.
    pub fn contains_box(&self, other: &ClosedBox, c: u32) -> bool {
        if other.g < self.g || other.d() != self.d() {
            return false;
        }
        let scale = pow_c(c, other.g - self.g);
        self.k.iter().zip(&other.k).all(|(a, b)| {
            let lo = a * &scale;
            let hi = &lo + &scale;
            *b >= lo && *b < hi
        })
    }

    /// Sup-norm gap between two closed boxes (zero when they meet).
    pub fn gap(&self, other: &ClosedBox, c: u32) -> BigRational {
        let (sa, sb) = (self.side(c), other.side(c));
        let (ca, cb) = (self.corner(c), other.corner(c));
        let mut best = BigRational::zero();
        for i in 0..self.d() {
            let left = &cb[i] - (&ca[i] + &sa);
            let right = &ca[i] - (&cb[i] + &sb);
            let g = if left > right { left } else { right };
            if g > best {
                best = g;
            }
        }
        best
    }

    /// Whether the closed boxes share no point.
    pub fn disjoint(&self, other: &ClosedBox, c: u32) -> bool {
        self.gap(other, c).is_positive()
    }
}

/// Ball radius known exactly or through its logarithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radius {
    pub ln: f64,
    pub exact: Option<BigRational>,
}

impl Radius {
    pub fn exact(r: BigRational) -> Self {
        Self { ln: ln_rational(&r), exact: Some(r) }
    }

    /// λ^e, exact when e is a non-negative integer.
    pub fn power(lambda: &BigRational, e: f64) -> Self {
        if e.fract() == 0.0 && (0.0..=64.0).contains(&e) {
            let mut acc = BigRational::one();
            for _ in 0..e as u32 {
                acc *= lambda;
            }
            return Self::exact(acc);
        }
        Self { ln: e * ln_rational(lambda), exact: None }
    }

    /// Certifies a < r; false when the comparison is within rounding of a tie.
    pub fn surely_above(&self, a: &BigRational) -> bool {
        if !a.is_positive() {
            return true;
        }
        match &self.exact {
            Some(r) => a < r,
            None => ln_rational(a) < self.ln - 1e-12 * (1.0 + self.ln.abs()),
        }
    }

    /// Certifies r ≤ a.
    pub fn surely_at_most(&self, a: &BigRational) -> bool {
        if !a.is_positive() {
            return false;
        }
        match &self.exact {
            Some(r) => r <= a,
            None => self.ln < ln_rational(a) - 1e-12 * (1.0 + self.ln.abs()),
        }
    }

    /// Certifies a ≤ r.
    pub fn surely_at_least(&self, a: &BigRational) -> bool {
        if !a.is_positive() {
            return true;
        }
        match &self.exact {
            Some(r) => a <= r,
            None => ln_rational(a) < self.ln - 1e-12 * (1.0 + self.ln.abs()),
        }
    }
}

/// Whether the closed box lies inside the open sup-norm ball B(x, r).
pub fn box_in_ball(b: &ClosedBox, x: &[BigRational], r: &Radius, c: u32) -> bool {
    let s = b.side(c);
    b.corner(c).iter().zip(x).all(|(a, xi)| {
        let left = xi - a;
        let right = a + &s - xi;
        r.surely_above(&left) && r.surely_above(&right)
    })
}

/// A closed c-adic box of maximal diameter inside B(x, r) ∩ L, lowest corner first.
pub fn maximal_box_in_ball(x: &[BigRational], r: &Radius, within: &ClosedBox, c: u32) -> Option<ClosedBox> {
    let lc = (c as f64).ln();
    let start = ((-(r.ln + 2f64.ln()) / lc).floor().max(0.0) as u32).max(within.g);
    for g in start..start + 6 {
        let den = pow_c(c, g);
        let side = ratio(BigUint::one(), den.clone());
        let scale = pow_c(c, g - within.g);
        let mut k = Vec::with_capacity(x.len());
        for (axis, xi) in x.iter().enumerate() {
            let lo_k = &within.k[axis] * &scale;
            let hi_k = &lo_k + &scale;
            let scaled = xi * BigRational::from_integer(BigInt::from(den.clone()));
            let center = scaled.floor().to_integer();
            let mut found = None;
            let span = c as i64 + 1;
            for off in -span..=span {
                let t = &center + BigInt::from(off);
                if t.is_negative() {
                    continue;
                }
                let t = t.magnitude().clone();
                if t < lo_k || &t + 1u32 > hi_k {
                    continue;
                }
                let a = ratio(t.clone(), den.clone());
                let left = xi - &a;
                let right = &a + &side - xi;
                if r.surely_above(&left) && r.surely_above(&right) {
                    found = Some(t);
                    break;
                }
            }
            match found {
                Some(t) => k.push(t),
                None => break,
            }
        }
        if k.len() == x.len() {
            return Some(ClosedBox { g, k });
        }
    }
    None
}

/// Digits of k in base c at depth g, most significant first.
pub(crate) fn digits_of(k: &BigUint, c: u32, g: u32) -> Vec<u32> {
    let mut out = vec![0u32; g as usize];
    let mut v = k.clone();
    let base = BigUint::from(c);
    for slot in out.iter_mut().rev() {
        let (q, r) = v.div_rem(&base);
        *slot = r.to_u32().unwrap_or(0);
        v = q;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn maximal_box_open_ball() {
        // B(1/2, 1/4) open: [1/4, 1/2] touches the boundary, so the maximal boxes have side 1/8.
        let r = Radius::exact(q(1, 4));
        let b = maximal_box_in_ball(&[q(1, 2)], &r, &ClosedBox::root(1), 2).unwrap();
        assert_eq!(b.g, 3);
        assert_eq!(b.k[0], BigUint::from(3u32));
        assert!(box_in_ball(&b, &[q(1, 2)], &r, 2));
        // Odd center: [1/4, 1/2] fits strictly inside B(3/8, 1/4).
        let b = maximal_box_in_ball(&[q(3, 8)], &r, &ClosedBox::root(1), 2).unwrap();
        assert_eq!((b.g, b.k[0].clone()), (2, BigUint::from(1u32)));
    }

    #[test]
    fn maximal_box_respects_parent() {
        let l = ClosedBox { g: 1, k: vec![BigUint::from(1u32)] };
        let r = Radius::exact(q(1, 8));
        let b = maximal_box_in_ball(&[q(1, 2)], &r, &l, 2).unwrap();
        assert!(l.contains_box(&b, 2));
        assert_eq!(b.corner(2)[0], q(1, 2));
    }

    #[test]
    fn irrational_radius_is_conservative() {
        let lambda = q(1, 8);
        let r = Radius::power(&lambda, 1.5);
        assert!(r.exact.is_none());
        assert!(r.surely_above(&q(1, 23)));
        assert!(!r.surely_above(&q(1, 22)));
        let r2 = Radius::power(&lambda, 2.0);
        assert_eq!(r2.exact, Some(q(1, 64)));
        assert!(!r2.surely_above(&q(1, 64)));
    }

    #[test]
    fn gaps_and_nesting() {
        let a = ClosedBox { g: 2, k: vec![BigUint::from(0u32)] };
        let b = ClosedBox { g: 2, k: vec![BigUint::from(1u32)] };
        let e = ClosedBox { g: 3, k: vec![BigUint::from(4u32)] };
        assert!(!a.disjoint(&b, 2));
        assert_eq!(a.gap(&e, 2), q(1, 4));
        assert!(b.contains_box(&ClosedBox { g: 4, k: vec![BigUint::from(7u32)] }, 2));
        assert!(!b.contains_box(&e, 2));
        assert_eq!(digits_of(&BigUint::from(6u32), 2, 4), vec![0, 1, 1, 0]);
    }
}
