//! Point–scale systems {(x_n, λ_n)} and their dyadic scale classes T_j.

mod alpha;
mod generators;

pub use alpha::{AlphaSpec, Convergent, ContinuedFraction};
pub use generators::{
    gen_badic, gen_nalpha, gen_poisson, gen_rationals, gen_uniform, rational_labels, LambdaRule,
    RadiusMode, DEFAULT_BUDGET,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Materialized system with non-increasing scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointScaleSystem {
    pub family: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub pairs: Vec<(Vec<f64>, f64)>,
}

impl PointScaleSystem {
    /// Wraps explicit pairs after checking the system invariants.
    pub fn from_pairs(family: &str, params: serde_json::Value, seed: Option<u64>, pairs: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let s = Self { family: family.to_string(), params, seed, pairs };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.pairs.first().map_or(1, |p| p.0.len());
        for (n, (x, l)) in self.pairs.iter().enumerate() {
            if x.len() != d {
                return domain(format!("pair {n} has dimension {}, expected {d}", x.len()));
            }
            if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return domain(format!("pair {n} lies outside [0,1]^d"));
            }
            if !(*l > 0.0) || !l.is_finite() {
                return domain(format!("pair {n} has non-positive scale"));
            }
        }
        if self.pairs.windows(2).any(|w| w[1].1 > w[0].1) {
            return domain("scales must be non-increasing");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn d(&self) -> usize {
        self.pairs.first().map_or(1, |p| p.0.len())
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.pairs[n].0
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.pairs[n].1
    }

    pub fn lambda_min(&self) -> Option<f64> {
        self.pairs.last().map(|p| p.1)
    }
}

/// The partition n ∈ T_j ⇔ 2^{-(j+1)} < λ_n ≤ 2^{-j}.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaleBuckets {
    pub buckets: BTreeMap<i32, Vec<usize>>,
}

impl ScaleBuckets {
    pub fn get(&self, j: i32) -> &[usize] {
        self.buckets.get(&j).map_or(&[], Vec::as_slice)
    }
}

/// The j with 2^{-(j+1)} < λ ≤ 2^{-j}, read exactly from the float's binary exponent.
pub fn dyadic_class(lambda: f64) -> i32 {
    assert!(lambda > 0.0 && lambda.is_finite(), "scale must be positive and finite");
    let bits = lambda.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if raw_exp == 0 {
        // Subnormal: λ = frac·2^{-1074}.
        let top = 63 - frac.leading_zeros() as i32;
        let e = top - 1074;
        return if frac.is_power_of_two() { -e } else { -e - 1 };
    }
    let e = raw_exp - 1023;
    if frac == 0 { -e } else { -e - 1 }
}

/// Buckets every index of the system.
pub fn bucket(system: &PointScaleSystem) -> ScaleBuckets {
    let mut buckets: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (n, (_, l)) in system.pairs.iter().enumerate() {
        buckets.entry(dyadic_class(*l)).or_default().push(n);
    }
    ScaleBuckets { buckets }
}
