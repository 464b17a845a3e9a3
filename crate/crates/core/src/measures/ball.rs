use serde::{Deserialize, Serialize};

use super::BoxMeasure;
use crate::cgrid::{inside_ranges, meeting_ranges, CAdicBox};
use crate::error::{domain, Error, Result};
use crate::numerics::LogAcc;

/// Certified log-mass bracket of a ball, read at generation `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassBracket {
    pub lower: f64,
    pub upper: f64,
    pub j: u32,
}

impl MassBracket {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// Brackets log μ(B(center, r)) between boxes inside the ball and boxes meeting it.
pub fn ball_mass(mu: &BoxMeasure, center: &[f64], r: f64, margin: u32) -> Result<MassBracket> {
    let geom = mu.geom;
    if center.len() != geom.d {
        return domain("center dimension differs from measure dimension");
    }
    if !(r > 0.0) || !r.is_finite() {
        return domain(format!("radius must be positive and finite, got {r}"));
    }
    let c = geom.c as f64;
    let floor_r = c.powi(-(mu.j_max as i32) + margin as i32);
    if r < floor_r {
        return Err(Error::Resolution(format!(
            "radius {r:e} below resolution {floor_r:e} (depth {}, margin {margin})",
            mu.j_max
        )));
    }
    let coarse = (-(r.ln()) / c.ln()).ceil().max(0.0) as u32;
    let j = (coarse + margin).min(mu.j_max);
    let level = mu.level(j)?;
    let sum_over = |ranges: Option<Vec<(u64, u64)>>| -> f64 {
        let Some(ranges) = ranges else { return f64::NEG_INFINITY };
        let mut acc = LogAcc::default();
        if geom.d == 1 {
            let (lo, hi) = ranges[0];
            level[lo as usize..=hi as usize].iter().for_each(|&v| acc.push(v));
        } else {
            let mut k: Vec<u64> = ranges.iter().map(|r| r.0).collect();
            loop {
                let b = CAdicBox { c: geom.c, j, k: k.clone() };
                acc.push(level[b.linear_index()]);
                let mut axis = geom.d;
                loop {
                    if axis == 0 {
                        return acc.value();
                    }
                    axis -= 1;
                    if k[axis] < ranges[axis].1 {
                        k[axis] += 1;
                        break;
                    }
                    k[axis] = ranges[axis].0;
                }
            }
        }
        acc.value()
    };
    let upper = sum_over(meeting_ranges(center, r, j, geom));
    let lower = sum_over(inside_ranges(center, r, j, geom));
    Ok(MassBracket { lower: lower.min(upper), upper, j })
}
