//! Exact descriptions of real numbers through continued fractions.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A real number given exactly enough to reproduce its continued fraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaSpec {
    /// [head…; period period …], e.g. golden = head [1], period [1].
    Periodic { head: Vec<u64>, period: Vec<u64> },
    /// a_0 = 0, a_1 = 2, a_{k+1} = q_k^k up to `depth`, then partial quotients 1.
    Liouville { depth: usize },
    /// Decimal literal such as "1.41421356237309504880168872420969807856967187537694".
    Decimal { digits: String },
    /// p/q, always rejected as rational.
    Fraction { p: u64, q: u64 },
}

impl AlphaSpec {
    pub fn golden() -> Self {
        AlphaSpec::Periodic { head: vec![1], period: vec![1] }
    }

    pub fn sqrt2() -> Self {
        AlphaSpec::Periodic { head: vec![1], period: vec![2] }
    }

    /// Parses `golden`, `sqrt2`, `liouville:D`, `periodic:h1,h2;p1,p2`, `p/q` or a decimal literal.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let nums = |t: &str| -> Result<Vec<u64>> {
            t.split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse::<u64>().map_err(|e| crate::Error::Invalid(format!("{x}: {e}"))))
                .collect()
        };
        if s == "golden" {
            return Ok(Self::golden());
        }
        if s == "sqrt2" {
            return Ok(Self::sqrt2());
        }
        if let Some(rest) = s.strip_prefix("liouville:") {
            let depth = rest.parse().map_err(|e| crate::Error::Invalid(format!("{rest}: {e}")))?;
            return Ok(AlphaSpec::Liouville { depth });
        }
        if let Some(rest) = s.strip_prefix("periodic:") {
            let (h, p) = rest.split_once(';').ok_or_else(|| crate::Error::Invalid("periodic needs head;period".into()))?;
            return Ok(AlphaSpec::Periodic { head: nums(h)?, period: nums(p)? });
        }
        if let Some((p, q)) = s.split_once('/') {
            let v = nums(&format!("{p},{q}"))?;
            return Ok(AlphaSpec::Fraction { p: v[0], q: v[1] });
        }
        if s.chars().all(|ch| ch.is_ascii_digit() || ch == '.') && s.chars().filter(|&c| c == '.').count() <= 1 {
            return Ok(AlphaSpec::Decimal { digits: s.to_string() });
        }
        Err(crate::Error::Invalid(format!("cannot parse α descriptor {s:?}")))
    }

    /// Expands into convergents; `k_max` bounds the count for infinite expansions.
    pub fn continued_fraction(&self, k_max: usize) -> Result<ContinuedFraction> {
        match self {
            AlphaSpec::Fraction { p, q } => domain(format!("α = {p}/{q} is rational")),
            AlphaSpec::Periodic { head, period } => {
                if period.is_empty() || period.contains(&0) || head.is_empty() || head[1..].contains(&0) {
                    return domain("periodic expansion needs a non-empty period of positive quotients");
                }
                let terms = head.iter().chain(period.iter().cycle()).take(k_max + 2).copied().map(BigUint::from);
                Ok(ContinuedFraction::from_terms(terms, k_max + 2, None))
            }
            AlphaSpec::Liouville { depth } => {
                if *depth < 2 {
                    return domain("Liouville depth must be at least 2");
                }
                let mut cf = ContinuedFraction::from_terms([BigUint::zero(), BigUint::from(2u32)], 2, Some(*depth));
                while cf.terms.len() <= *depth {
                    let k = cf.terms.len() - 1;
                    let next = cf.convergents[k].q.pow(k as u32);
                    cf.push(next);
                }
                Ok(cf)
            }
            AlphaSpec::Decimal { digits } => {
                let (num, den, scale) = decimal_parts(digits)?;
                // Convergents are reliable while q_k^2 stays below the literal's denominator.
                let mut cf = ContinuedFraction::euclid(num, den);
                let reliable = cf.convergents.iter().take_while(|c| &c.q * &c.q * 10u32 < scale).count();
                cf.truncate(reliable.max(2).min(cf.terms.len()));
                cf.exact_limit = Some(cf.terms.len() - 1);
                cf.precision_bits = Some(scale.bits() as u32 - 4);
                Ok(cf)
            }
        }
    }

    /// floor(frac(α)·2^128), accurate to far below one unit for every shipped descriptor.
    pub fn frac_fixed128(&self) -> Result<u128> {
        if let AlphaSpec::Decimal { digits } = self {
            let (num, den, scale) = decimal_parts(digits)?;
            if scale.bits() < 94 {
                return domain(format!("decimal literal {digits} carries fewer than 90 bits"));
            }
            return Ok(to_u128(&(((num % &den) << 128u32) / den)));
        }
        let mut cf = match self {
            AlphaSpec::Periodic { .. } => self.continued_fraction(120)?,
            _ => self.continued_fraction(64)?,
        };
        while cf.convergents.last().map_or(0, |c| c.q.bits()) < 70 {
            match self {
                AlphaSpec::Liouville { .. } => cf.push(BigUint::one()),
                _ => unreachable!("periodic expansions are already deep enough"),
            }
        }
        let last = cf.convergents.last().expect("convergents");
        let a0 = &cf.terms[0];
        let frac_num = &last.p - a0 * &last.q;
        Ok(to_u128(&((frac_num << 128u32) / &last.q)))
    }
}

/// p_k/q_k with p_k = a_k p_{k-1} + p_{k-2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Convergent {
    pub p: BigUint,
    pub q: BigUint,
}

/// Partial quotients and convergents of a real number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuedFraction {
    pub terms: Vec<BigUint>,
    pub convergents: Vec<Convergent>,
    /// Index past which the terms are not part of the number's defining structure.
    pub exact_limit: Option<usize>,
    /// Binary precision of a literal source, when finite.
    pub precision_bits: Option<u32>,
}

impl ContinuedFraction {
    fn from_terms(terms: impl IntoIterator<Item = BigUint>, take: usize, exact_limit: Option<usize>) -> Self {
        let mut cf = ContinuedFraction { terms: Vec::new(), convergents: Vec::new(), exact_limit, precision_bits: None };
        for t in terms.into_iter().take(take) {
            cf.push(t);
        }
        cf
    }

    fn euclid(mut num: BigUint, mut den: BigUint) -> Self {
        let mut cf = ContinuedFraction { terms: Vec::new(), convergents: Vec::new(), exact_limit: None, precision_bits: None };
        while !den.is_zero() {
            let (a, r) = num.div_rem(&den);
            cf.push(a);
            num = den;
            den = r;
        }
        cf
    }

    fn truncate(&mut self, n: usize) {
        self.terms.truncate(n);
        self.convergents.truncate(n);
    }

    fn push(&mut self, a: BigUint) {
        let k = self.convergents.len();
        let (p, q) = match k {
            0 => (a.clone(), BigUint::one()),
            1 => {
                let c0 = &self.convergents[0];
                (&a * &c0.p + BigUint::one(), a.clone())
            }
            _ => {
                let (c1, c2) = (&self.convergents[k - 1], &self.convergents[k - 2]);
                (&a * &c1.p + &c2.p, &a * &c1.q + &c2.q)
            }
        };
        self.terms.push(a);
        self.convergents.push(Convergent { p, q });
    }

    /// ξ_k = 1 + ln q_{k+1} / ln q_k for every k with q_k > 1 and q_{k+1} available.
    pub fn exponents(&self) -> Vec<(usize, f64)> {
        let limit = self.exact_limit.unwrap_or(self.convergents.len() - 1).min(self.convergents.len() - 1);
        (0..limit)
            .filter(|&k| self.convergents[k].q > BigUint::one())
            .map(|k| (k, 1.0 + crate::numerics::ln_biguint(&self.convergents[k + 1].q) / crate::numerics::ln_biguint(&self.convergents[k].q)))
            .collect()
    }
}

fn to_u128(x: &BigUint) -> u128 {
    let digits = x.to_u64_digits();
    let lo = *digits.first().unwrap_or(&0) as u128;
    let hi = *digits.get(1).unwrap_or(&0) as u128;
    lo | (hi << 64)
}

/// Reduced fraction num/den of a decimal literal and its power-of-ten scale.
fn decimal_parts(digits: &str) -> Result<(BigUint, BigUint, BigUint)> {
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let scale = BigUint::from(10u32).pow(frac.len() as u32);
    let num: BigUint = format!("{int}{frac}").parse().map_err(|_| crate::Error::Invalid(digits.to_string()))?;
    let g = num.gcd(&scale);
    let (num, den) = (&num / &g, &scale / &g);
    if den.bits() <= 20 {
        return domain(format!("decimal literal {digits} is the rational {num}/{den}"));
    }
    Ok((num, den, scale))
}
