//! Base-c grid arithmetic on [0,1)^d with sup-norm balls.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Base and ambient dimension of a c-adic grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub c: u32,
    pub d: usize,
}

impl GridGeometry {
    pub fn new(c: u32, d: usize) -> Result<Self> {
        if c < 2 {
            return domain(format!("base must be at least 2, got {c}"));
        }
        if d == 0 {
            return domain("dimension must be at least 1");
        }
        Ok(Self { c, d })
    }

    /// Deepest generation whose indices are handled exactly (60 bits of resolution).
    pub fn max_depth(&self) -> u32 {
        (60.0 / (self.c as f64).log2()).floor() as u32
    }

    /// c^j as an integer; panics past the depth cap.
    pub fn side_count(&self, j: u32) -> u64 {
        (self.c as u64).checked_pow(j).expect("generation within depth cap")
    }

    /// Sup-norm diameter c^{-j} of a generation-j box.
    pub fn diameter(&self, j: u32) -> f64 {
        (self.c as f64).powi(-(j as i32))
    }

    pub fn check_depth(&self, j: u32) -> Result<()> {
        if j > self.max_depth() {
            return Err(Error::Resolution(format!(
                "generation {j} exceeds depth cap {} for base {}",
                self.max_depth(),
                self.c
            )));
        }
        Ok(())
    }

    /// Number of boxes c^{jd} at generation j.
    pub fn box_count(&self, j: u32) -> u64 {
        self.side_count(j).pow(self.d as u32)
    }
}

/// The box I_{j,k} = Π [k_i c^{-j}, (k_i+1) c^{-j}).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CAdicBox {
    pub c: u32,
    pub j: u32,
    pub k: Vec<u64>,
}

impl CAdicBox {
    pub fn root(geom: GridGeometry) -> Self {
        Self { c: geom.c, j: 0, k: vec![0; geom.d] }
    }

    pub fn geometry(&self) -> GridGeometry {
        GridGeometry { c: self.c, d: self.k.len() }
    }

    pub fn diameter(&self) -> f64 {
        self.geometry().diameter(self.j)
    }

    /// Row-major position among the c^{jd} boxes of its generation.
    pub fn linear_index(&self) -> usize {
        let side = self.geometry().side_count(self.j);
        self.k.iter().fold(0u64, |acc, &ki| acc * side + ki) as usize
    }

    pub fn from_linear(geom: GridGeometry, j: u32, mut idx: usize) -> Self {
        let side = geom.side_count(j) as usize;
        let mut k = vec![0u64; geom.d];
        for slot in k.iter_mut().rev() {
            *slot = (idx % side) as u64;
            idx /= side;
        }
        Self { c: geom.c, j, k }
    }

    pub fn children(&self) -> Vec<CAdicBox> {
        let d = self.k.len();
        let c = self.c as u64;
        let total = c.pow(d as u32);
        (0..total)
            .map(|mut code| {
                let mut k = vec![0u64; d];
                for i in (0..d).rev() {
                    k[i] = self.k[i] * c + code % c;
                    code /= c;
                }
                CAdicBox { c: self.c, j: self.j + 1, k }
            })
            .collect()
    }

    pub fn parent(&self) -> Option<CAdicBox> {
        (self.j > 0).then(|| CAdicBox {
            c: self.c,
            j: self.j - 1,
            k: self.k.iter().map(|ki| ki / self.c as u64).collect(),
        })
    }

    /// Whether `x` lies in the half-open box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.k.len()
            && x.iter().zip(&self.k).all(|(&xi, &ki)| {
                (0.0..1.0).contains(&xi) && floor_scaled(xi, self.c, self.j) == ki as i128
            })
    }

    /// Lower-left corner as floating point.
    pub fn corner(&self) -> Vec<f64> {
        let h = self.diameter();
        self.k.iter().map(|&ki| ki as f64 * h).collect()
    }

    /// Base-c digits of coordinate `i`, most significant first.
    pub fn digits(&self, i: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.j as usize];
        let mut v = self.k[i];
        for slot in out.iter_mut().rev() {
            *slot = (v % self.c as u64) as u32;
            v /= self.c as u64;
        }
        out
    }
}

/// The generation-j box containing `x`, with k_i = floor(x_i c^j) computed exactly.
pub fn locate(x: &[f64], j: u32, geom: GridGeometry) -> Result<CAdicBox> {
    if x.len() != geom.d {
        return domain(format!("point has {} coordinates, grid has {}", x.len(), geom.d));
    }
    geom.check_depth(j)?;
    let mut k = Vec::with_capacity(geom.d);
    for &xi in x {
        if !(0.0..1.0).contains(&xi) {
            return domain(format!("coordinate {xi} outside [0,1)"));
        }
        k.push(floor_scaled(xi, geom.c, j) as u64);
    }
    Ok(CAdicBox { c: geom.c, j, k })
}

/// The 3^d-neighbourhood of `b`, clipped to the unit cube.
pub fn neighbors(b: &CAdicBox) -> Vec<CAdicBox> {
    let side = b.geometry().side_count(b.j);
    let ranges: Vec<(u64, u64)> =
        b.k.iter().map(|&ki| (ki.saturating_sub(1), (ki + 1).min(side - 1))).collect();
    product_boxes(b.c, b.j, &ranges)
}

/// Boxes of generation j meeting the open sup-norm ball B(center, r) inside [0,1)^d.
pub fn ball_cover_boxes(center: &[f64], r: f64, j: u32, geom: GridGeometry) -> Result<Vec<CAdicBox>> {
    geom.check_depth(j)?;
    if !(r > 0.0) {
        return domain(format!("radius must be positive, got {r}"));
    }
    let Some(ranges) = meeting_ranges(center, r, j, geom) else {
        return Ok(Vec::new());
    };
    Ok(product_boxes(geom.c, j, &ranges))
}

/// Per-axis inclusive index ranges of generation-j boxes meeting the open ball.
pub fn meeting_ranges(center: &[f64], r: f64, j: u32, geom: GridGeometry) -> Option<Vec<(u64, u64)>> {
    let side = geom.side_count(j) as i128;
    center
        .iter()
        .map(|&x| {
            let lo = floor_scaled(x - r, geom.c, j).max(0);
            let hi = (ceil_scaled(x + r, geom.c, j) - 1).min(side - 1);
            (lo <= hi).then_some((lo as u64, hi as u64))
        })
        .collect()
}

/// Per-axis inclusive index ranges of generation-j boxes whose closure lies in the closed ball.
pub fn inside_ranges(center: &[f64], r: f64, j: u32, geom: GridGeometry) -> Option<Vec<(u64, u64)>> {
    let side = geom.side_count(j) as i128;
    center
        .iter()
        .map(|&x| {
            let lo = ceil_scaled(x - r, geom.c, j).max(0);
            let hi = (floor_scaled(x + r, geom.c, j) - 1).min(side - 1);
            (lo <= hi).then_some((lo as u64, hi as u64))
        })
        .collect()
}

fn product_boxes(c: u32, j: u32, ranges: &[(u64, u64)]) -> Vec<CAdicBox> {
    let mut out = vec![Vec::with_capacity(ranges.len())];
    for &(lo, hi) in ranges {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<u64>| {
                (lo..=hi).map(move |ki| {
                    let mut k = prefix.clone();
                    k.push(ki);
                    k
                })
            })
            .collect();
    }
    out.into_iter().map(|k| CAdicBox { c, j, k }).collect()
}

/// Splits a finite nonzero float into (m, e) with |x| = m·2^e.
fn decompose(x: f64) -> (u64, i32) {
    let bits = x.abs().to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

/// Exact floor and ceiling of |x|·c^j for finite x; saturates far outside the unit range.
fn scaled_floor_ceil_abs(x: f64, c: u32, j: u32) -> (i128, i128) {
    if x == 0.0 {
        return (0, 0);
    }
    let (m, e) = decompose(x);
    let cj = (c as u128).checked_pow(j).expect("generation within depth cap");
    let prod = (m as u128).checked_mul(cj);
    let Some(prod) = prod else {
        // Only reachable for |x| far outside [0,1] at extreme depth.
        let v = x.abs() * (c as f64).powi(j as i32);
        return (v.floor() as i128, v.ceil() as i128);
    };
    if e >= 0 {
        let v = prod.checked_shl(e as u32).filter(|v| v >> e == prod).unwrap_or(u128::MAX >> 2);
        let v = v.min(i128::MAX as u128 >> 2) as i128;
        return (v, v);
    }
    let s = (-e) as u32;
    if s >= 128 {
        return (0, 1);
    }
    let fl = prod >> s;
    let exact = fl << s == prod;
    (fl as i128, fl as i128 + i128::from(!exact))
}

/// floor(x·c^j) computed without rounding.
pub fn floor_scaled(x: f64, c: u32, j: u32) -> i128 {
    let (fl, ce) = scaled_floor_ceil_abs(x, c, j);
    if x >= 0.0 { fl } else { -ce }
}

/// ceil(x·c^j) computed without rounding.
pub fn ceil_scaled(x: f64, c: u32, j: u32) -> i128 {
    let (fl, ce) = scaled_floor_ceil_abs(x, c, j);
    if x >= 0.0 { ce } else { -fl }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(c: u32, d: usize) -> GridGeometry {
        GridGeometry::new(c, d).unwrap()
    }

    #[test]
    fn locate_examples() {
        assert_eq!(locate(&[0.5], 1, g(2, 1)).unwrap().k, vec![1]);
        assert_eq!(locate(&[0.0, 0.0], 7, g(3, 2)).unwrap().k, vec![0, 0]);
        assert_eq!(locate(&[0.7], 2, g(3, 1)).unwrap().k, vec![6]);
    }

    #[test]
    fn locate_rejects_outside_unit_interval() {
        assert!(matches!(locate(&[1.0], 3, g(2, 1)), Err(Error::Domain(_))));
        assert!(matches!(locate(&[-0.1], 3, g(2, 1)), Err(Error::Domain(_))));
        assert!(matches!(locate(&[0.2], 61, g(2, 1)), Err(Error::Resolution(_))));
    }

    #[test]
    fn exact_scaling_at_full_depth() {
        let x = 1.0 - f64::EPSILON / 2.0;
        assert_eq!(floor_scaled(x, 2, 60), (1i128 << 60) - 128);
        assert_eq!(floor_scaled(0.1, 10, 1), 1);
        assert_eq!(ceil_scaled(0.25, 2, 2), 1);
        assert_eq!(ceil_scaled(-0.25, 2, 3), -2);
        assert_eq!(floor_scaled(-0.3, 2, 1), -1);
    }

    #[test]
    fn neighbor_examples() {
        let ks = |b: &CAdicBox| neighbors(b).into_iter().map(|n| n.k[0]).collect::<Vec<_>>();
        assert_eq!(ks(&CAdicBox { c: 3, j: 2, k: vec![4] }), vec![3, 4, 5]);
        assert_eq!(ks(&CAdicBox { c: 2, j: 1, k: vec![0] }), vec![0, 1]);
        assert_eq!(neighbors(&CAdicBox { c: 2, j: 3, k: vec![3, 4] }).len(), 9);
    }

    #[test]
    fn ball_cover_examples() {
        let bs = ball_cover_boxes(&[0.5], 0.25, 2, g(2, 1)).unwrap();
        assert_eq!(bs.iter().map(|b| b.k[0]).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(ball_cover_boxes(&[0.5, 0.5], 1.0, 3, g(2, 2)).unwrap().len(), 64);
        assert_eq!(ball_cover_boxes(&[0.3], 0.01, 3, g(2, 1)).unwrap().len(), 1);
    }

    #[test]
    fn children_and_linear_index_round_trip() {
        let geom = g(3, 2);
        let b = CAdicBox { c: 3, j: 2, k: vec![5, 7] };
        assert_eq!(CAdicBox::from_linear(geom, 2, b.linear_index()), b);
        let kids = b.children();
        assert_eq!(kids.len(), 9);
        assert!(kids.iter().all(|k| k.parent().as_ref() == Some(&b)));
        assert_eq!(b.digits(0), vec![1, 2]);
    }
}
