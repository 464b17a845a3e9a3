use num_integer::Integer;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{AlphaSpec, PointScaleSystem};
use crate::error::{domain, Error, Result};
use crate::rng::DrawStream;

/// Default cap on materialized pairs.
pub const DEFAULT_BUDGET: usize = 1 << 26;

fn check_budget(count: f64, budget: usize) -> Result<()> {
    if count > budget as f64 {
        return Err(Error::Resource(format!("{count:.3e} pairs exceed the budget of {budget}")));
    }
    Ok(())
}

/// All (k b^{-j}, 2 b^{-j}) for 1 ≤ j ≤ j_max, in order of decreasing scale.
pub fn gen_badic(b: u32, d: usize, j_max: u32, budget: usize) -> Result<PointScaleSystem> {
    if b < 2 || d == 0 {
        return domain("b-adic family needs b ≥ 2 and d ≥ 1");
    }
    let total: f64 = (1..=j_max).map(|j| (b as f64).powi((j as usize * d) as i32)).sum();
    check_budget(total, budget)?;
    let mut pairs = Vec::with_capacity(total as usize);
    for j in 1..=j_max {
        let side = (b as u64).pow(j);
        let h = (b as f64).powi(-(j as i32));
        let count = side.pow(d as u32);
        for mut code in 0..count {
            let mut x = vec![0.0; d];
            for slot in x.iter_mut().rev() {
                *slot = (code % side) as f64 * h;
                code /= side;
            }
            pairs.push((x, 2.0 * h));
        }
    }
    PointScaleSystem::from_pairs("badic", json!({ "b": b, "d": d, "j_max": j_max }), None, pairs)
}

/// Radius attached to p/q.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusMode {
    /// 2 q^{-(1+1/d)}.
    Standard,
    /// 2/(√5 q²), d = 1 only.
    Hurwitz,
}

impl RadiusMode {
    pub fn radius(self, q: u64, d: usize) -> f64 {
        match self {
            RadiusMode::Standard => 2.0 * (q as f64).powf(-(1.0 + 1.0 / d as f64)),
            RadiusMode::Hurwitz => 2.0 / (5f64.sqrt() * (q as f64) * (q as f64)),
        }
    }
}

/// (p, q) with p ∈ {0..q}^d for q ≤ q_max, in generation order.
pub fn rational_labels(q_max: u64, d: usize, irreducible_only: bool) -> Vec<(Vec<u64>, u64)> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        let side = q + 1;
        let count = side.pow(d as u32);
        for mut code in 0..count {
            let mut p = vec![0u64; d];
            for slot in p.iter_mut().rev() {
                *slot = code % side;
                code /= side;
            }
            if !irreducible_only || p.iter().any(|pi| pi.gcd(&q) == 1) {
                out.push((p, q));
            }
        }
    }
    out
}

/// Rational points p/q with radii by `mode`.
pub fn gen_rationals(q_max: u64, d: usize, irreducible_only: bool, mode: RadiusMode, budget: usize) -> Result<PointScaleSystem> {
    if q_max < 1 || d == 0 {
        return domain("rational family needs q_max ≥ 1 and d ≥ 1");
    }
    if mode == RadiusMode::Hurwitz && d != 1 {
        return domain("Hurwitz radii exist only for d = 1");
    }
    let total: f64 = (1..=q_max).map(|q| ((q + 1) as f64).powi(d as i32)).sum();
    check_budget(total, budget)?;
    let pairs = rational_labels(q_max, d, irreducible_only)
        .into_iter()
        .map(|(p, q)| (p.iter().map(|&pi| pi as f64 / q as f64).collect(), mode.radius(q, d)))
        .collect();
    PointScaleSystem::from_pairs(
        "rationals",
        json!({ "q_max": q_max, "d": d, "irreducible_only": irreducible_only, "mode": mode }),
        None,
        pairs,
    )
}

/// ({nα}, 1/n) for n = 1..n_max, {nα} from a 128-bit fixed-point fractional part.
pub fn gen_nalpha(alpha: &AlphaSpec, n_max: u64, budget: usize) -> Result<PointScaleSystem> {
    check_budget(n_max as f64, budget)?;
    let frac = alpha.frac_fixed128()?;
    let pairs = (1..=n_max)
        .map(|n| {
            let v = (n as u128).wrapping_mul(frac);
            ((vec![(v >> 75) as f64 * 2f64.powi(-53)]), 1.0 / n as f64)
        })
        .collect();
    PointScaleSystem::from_pairs("nalpha", json!({ "alpha": alpha, "n_max": n_max }), None, pairs)
}

/// Poisson points on [0,1]×[λ_min,1] with intensity ds·γ dλ/λ².
pub fn gen_poisson(gamma: f64, lambda_min: f64, seed: u64, budget: usize) -> Result<PointScaleSystem> {
    if !(gamma > 0.0) || !(lambda_min > 0.0 && lambda_min < 1.0) {
        return domain("Poisson family needs γ > 0 and λ_min in (0,1)");
    }
    let inv = 1.0 / lambda_min;
    let mean = gamma * (inv - 1.0);
    check_budget(mean + 10.0 * mean.sqrt(), budget)?;
    let count = Poisson::new(mean)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(DrawStream::new(seed, 0, 0).rng()) as u64;
    let mut stream = DrawStream::new(seed, 1, 0);
    let mut pairs: Vec<(Vec<f64>, f64)> = (0..count)
        .map(|_| {
            let (u, v) = stream.uniform_pair();
            (vec![u], 1.0 / (1.0 + v * (inv - 1.0)))
        })
        .collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1));
    PointScaleSystem::from_pairs("poisson", json!({ "gamma": gamma, "lambda_min": lambda_min }), Some(seed), pairs)
}

/// Scale rule for the uniform family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    Harmonic { gamma: f64 },
    Explicit { values: Vec<f64> },
}

/// I.i.d. uniform points paired with the scale rule.
pub fn gen_uniform(rule: &LambdaRule, n_max: usize, d: usize, seed: u64) -> Result<PointScaleSystem> {
    if d == 0 {
        return domain("dimension must be at least 1");
    }
    let lambdas: Vec<f64> = match rule {
        LambdaRule::Harmonic { gamma } => {
            if !(*gamma > 0.0) {
                return domain("γ must be positive");
            }
            (1..=n_max).map(|n| gamma / n as f64).collect()
        }
        LambdaRule::Explicit { values } => {
            if values.windows(2).any(|w| w[1] > w[0]) {
                return domain("explicit scale list must be non-increasing");
            }
            values.iter().take(n_max).copied().collect()
        }
    };
    let slots = d.div_ceil(2) as u64;
    let pairs = lambdas
        .into_iter()
        .enumerate()
        .map(|(n, l)| {
            let mut s = DrawStream::new(seed, 2, n as u64 * slots);
            let mut x = Vec::with_capacity(d);
            while x.len() < d {
                let (u, v) = s.uniform_pair();
                x.push(u);
                if x.len() < d {
                    x.push(v);
                }
            }
            (x, l)
        })
        .collect();
    PointScaleSystem::from_pairs("uniform", json!({ "rule": rule, "n_max": n_max, "d": d }), Some(seed), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::bucket;

    #[test]
    fn badic_counts_and_scales() {
        let s = gen_badic(2, 1, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(s.len(), 6);
        let s3 = gen_badic(2, 1, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(s3.lambda(s3.len() - 1), 0.25);
        assert!(gen_badic(2, 2, 20, 1000).is_err());
    }

    #[test]
    fn rational_examples() {
        let s = gen_rationals(3, 1, true, RadiusMode::Standard, DEFAULT_BUDGET).unwrap();
        let mut xs: Vec<f64> = s.pairs.iter().map(|p| p.0[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0]);
        assert!((RadiusMode::Hurwitz.radius(5, 1) - 0.035_777_087_639_996_63).abs() < 1e-15);
        let all = rational_labels(4, 1, false);
        assert!(all.contains(&(vec![1], 2)) && all.contains(&(vec![2], 4)));
    }

    #[test]
    fn nalpha_examples() {
        let s = gen_nalpha(&AlphaSpec::sqrt2(), 10, DEFAULT_BUDGET).unwrap();
        assert!((s.point(0)[0] - 0.414_213_562_373_095).abs() < 1e-14);
        assert!((s.point(9)[0] - 0.142_135_623_730_950_5).abs() < 1e-13);
        assert_eq!(s.lambda(9), 0.1);
        assert!(gen_nalpha(&AlphaSpec::Fraction { p: 1, q: 3 }, 10, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn poisson_determinism_and_order() {
        let a = gen_poisson(2.0, 1e-3, 5, DEFAULT_BUDGET).unwrap();
        let b = gen_poisson(2.0, 1e-3, 5, DEFAULT_BUDGET).unwrap();
        assert_eq!(a, b);
        assert!(a.pairs.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(a.pairs.iter().all(|p| p.1 >= 1e-3 && p.1 <= 1.0));
    }

    #[test]
    fn uniform_rules() {
        let s = gen_uniform(&LambdaRule::Harmonic { gamma: 3.0 }, 10, 1, 1).unwrap();
        assert!((s.lambda(9) - 0.3).abs() < 1e-15);
        assert_eq!(s, gen_uniform(&LambdaRule::Harmonic { gamma: 3.0 }, 10, 1, 1).unwrap());
        assert!(gen_uniform(&LambdaRule::Explicit { values: vec![0.1, 0.2] }, 2, 1, 0).is_err());
        let b = bucket(&s);
        assert_eq!(b.buckets.values().map(Vec::len).sum::<usize>(), 10);
    }
}
