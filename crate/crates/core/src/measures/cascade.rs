use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoxMeasure, MeasureSpec};
use crate::cgrid::{CAdicBox, GridGeometry};
use crate::error::{domain, Error, Result};
use crate::rng::DrawStream;

/// Law of the exponent weight X attached to each box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Generator {
    Constant { value: f64 },
    Gaussian { mean: f64, variance: f64 },
    /// X = ln v_i with probability p_i.
    LogDiscrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Generator {
    /// ln E[e^{qX}].
    pub fn log_mgf(&self, q: f64) -> f64 {
        match self {
            Generator::Constant { value } => q * value,
            Generator::Gaussian { mean, variance } => q * mean + q * q * variance / 2.0,
            Generator::LogDiscrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * v.powf(q)).sum::<f64>().ln()
            }
        }
    }

    /// d/dq ln E[e^{qX}].
    pub fn log_mgf_prime(&self, q: f64) -> f64 {
        match self {
            Generator::Constant { value } => *value,
            Generator::Gaussian { mean, variance } => mean + q * variance,
            Generator::LogDiscrete { values, probs } => {
                let z: f64 = values.iter().zip(probs).map(|(v, p)| p * v.powf(q)).sum();
                let dz: f64 = values.iter().zip(probs).map(|(v, p)| p * v.powf(q) * v.ln()).sum();
                dz / z
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Generator::Constant { value } if !value.is_finite() => domain("constant weight must be finite"),
            Generator::Gaussian { mean, variance } if !mean.is_finite() || !(*variance >= 0.0) => {
                domain("gaussian generator needs finite mean and non-negative variance")
            }
            Generator::LogDiscrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return domain("discrete generator needs matching non-empty values and probs");
                }
                if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return domain("discrete generator values must be positive");
                }
                if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return domain("discrete generator probabilities must be a distribution");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, s: &mut DrawStream, cdf: &[f64]) -> f64 {
        match self {
            Generator::Constant { value } => {
                s.uniform_pair();
                *value
            }
            Generator::Gaussian { mean, variance } => mean + variance.sqrt() * s.normal(),
            Generator::LogDiscrete { values, .. } => {
                let (u, _) = s.uniform_pair();
                let i = cdf.partition_point(|&c| c <= u).min(values.len() - 1);
                values[i].ln()
            }
        }
    }
}

/// Canonical multiplicative cascade on the c-adic tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub c: u32,
    pub d: usize,
    pub generator: Generator,
    pub depth: u32,
    pub seed: u64,
}

impl CascadeSpec {
    /// L(q) = d ln c + ln E e^{qX}.
    pub fn big_l(&self, q: f64) -> f64 {
        self.d as f64 * (self.c as f64).ln() + self.generator.log_mgf(q)
    }

    /// θ(q) = (q L(1) − L(q)) / ln c.
    pub fn theta(&self, q: f64) -> f64 {
        (q * self.big_l(1.0) - self.big_l(q)) / (self.c as f64).ln()
    }

    /// θ'(q) = (L(1) − L'(q)) / ln c.
    pub fn theta_prime(&self, q: f64) -> f64 {
        (self.big_l(1.0) - self.generator.log_mgf_prime(q)) / (self.c as f64).ln()
    }

    pub fn validate(&self) -> Result<GridGeometry> {
        let geom = GridGeometry::new(self.c, self.d)?;
        self.generator.validate()?;
        let l1 = self.big_l(1.0);
        if !l1.is_finite() {
            return Err(Error::Construction("E[e^X] is not finite".into()));
        }
        if !(self.theta_prime(1.0) > 0.0) {
            return Err(Error::Construction(format!(
                "degenerate cascade: θ'(1) = {} is not positive",
                self.theta_prime(1.0)
            )));
        }
        geom.check_depth(self.depth)?;
        Ok(geom)
    }
}

const CHUNK: usize = 4096;

/// Mass of a depth-n box is c^{-nd} (E e^X)^{-n} e^{S_n(I)}, one X per box of generations 1..n.
pub fn build_cascade(spec: &CascadeSpec) -> Result<BoxMeasure> {
    let geom = spec.validate()?;
    if geom.box_count(spec.depth) > 1 << 28 {
        return Err(Error::Resource(format!("{} boxes exceed the memory budget", geom.box_count(spec.depth))));
    }
    let cdf: Vec<f64> = match &spec.generator {
        Generator::LogDiscrete { probs, .. } => probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect(),
        _ => Vec::new(),
    };
    let mut sums = vec![0.0f64];
    for g in 1..=spec.depth {
        let n = geom.box_count(g) as usize;
        let mut next = vec![0.0f64; n];
        next.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let start = ci * CHUNK;
            let mut stream = DrawStream::new(spec.seed, g as u64, start as u64);
            for (off, slot) in chunk.iter_mut().enumerate() {
                let idx = start + off;
                let parent = if geom.d == 1 {
                    idx / geom.c as usize
                } else {
                    CAdicBox::from_linear(geom, g, idx).parent().expect("non-root").linear_index()
                };
                *slot = sums[parent] + spec.generator.sample(&mut stream, &cdf);
            }
        });
        sums = next;
    }
    let n = spec.depth as f64;
    let shift = -n * spec.d as f64 * (spec.c as f64).ln() - n * spec.generator.log_mgf(1.0);
    sums.par_iter_mut().for_each(|s| *s += shift);
    BoxMeasure::from_finest(geom, spec.depth, sums, Some(MeasureSpec::Cascade(spec.clone())), Some(spec.seed))
}
