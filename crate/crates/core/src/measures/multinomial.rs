use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoxMeasure, MeasureSpec};
use crate::cgrid::{CAdicBox, GridGeometry};
use crate::error::{domain, Result};

/// Product of d self-similar measures, row i splitting mass by `weights[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultinomialSpec {
    pub c: u32,
    pub weights: Vec<Vec<f64>>,
}

impl MultinomialSpec {
    pub fn new(c: u32, weights: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self { c, weights };
        spec.validate()?;
        Ok(spec)
    }

    /// Lebesgue measure on [0,1)^d.
    pub fn uniform(c: u32, d: usize) -> Self {
        Self { c, weights: vec![vec![1.0 / c as f64; c as usize]; d] }
    }

    pub fn validate(&self) -> Result<()> {
        GridGeometry::new(self.c, self.weights.len())?;
        for (i, row) in self.weights.iter().enumerate() {
            if row.len() != self.c as usize {
                return domain(format!("weight row {i} has {} entries, base is {}", row.len(), self.c));
            }
            if row.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
                return domain(format!("weight row {i} has a non-positive entry; full support is required"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return domain(format!("weight row {i} sums to {s}"));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    pub fn geom(&self) -> GridGeometry {
        GridGeometry { c: self.c, d: self.d() }
    }

    /// Natural-log weight table, ln π^{(i)}_k.
    pub fn log_weights(&self) -> Vec<Vec<f64>> {
        self.weights.iter().map(|r| r.iter().map(|w| w.ln()).collect()).collect()
    }

    /// log μ(I_{j,k}) from the digits of k.
    pub fn log_box_mass(&self, b: &CAdicBox) -> f64 {
        let lw = self.log_weights();
        (0..self.d()).map(|i| b.digits(i).iter().map(|&dg| lw[i][dg as usize]).sum::<f64>()).sum()
    }

    /// Closed-form scaling function Σ_i −log_c Σ_k (π^{(i)}_k)^q.
    pub fn tau(&self, q: f64) -> f64 {
        let lc = (self.c as f64).ln();
        self.weights
            .iter()
            .map(|row| -row.iter().map(|w| w.powf(q)).sum::<f64>().ln() / lc)
            .sum()
    }

    /// Derivative of [`Self::tau`].
    pub fn tau_prime(&self, q: f64) -> f64 {
        let lc = (self.c as f64).ln();
        self.weights
            .iter()
            .map(|row| {
                let z: f64 = row.iter().map(|w| w.powf(q)).sum();
                let dz: f64 = row.iter().map(|w| w.powf(q) * w.ln()).sum();
                -dz / z / lc
            })
            .sum()
    }

    /// Entropy dimension Σ_i Σ_k −π log_c π, equal to τ'(1).
    pub fn entropy(&self) -> f64 {
        let lc = (self.c as f64).ln();
        self.weights.iter().flatten().map(|w| -w * w.ln() / lc).sum()
    }
}

/// μ_q: rows replaced by normalized q-th powers.
pub fn tilt_multinomial(spec: &MultinomialSpec, q: f64) -> MultinomialSpec {
    let weights = spec
        .weights
        .iter()
        .map(|row| {
            let z: f64 = row.iter().map(|w| w.powf(q)).sum();
            row.iter().map(|w| w.powf(q) / z).collect()
        })
        .collect();
    MultinomialSpec { c: spec.c, weights }
}

/// Stores μ(I_{j,k}) = Π_i Π_m π^{(i)}_{digit_m(k_i)} for all j ≤ j_max.
pub fn build_multinomial(spec: &MultinomialSpec, j_max: u32) -> Result<BoxMeasure> {
    spec.validate()?;
    let geom = spec.geom();
    geom.check_depth(j_max)?;
    let lw = spec.log_weights();
    let c = spec.c as usize;
    let mut levels: Vec<Vec<f64>> = vec![vec![0.0]];
    for j in 0..j_max {
        let prev = levels.last().expect("nonempty");
        let next = if geom.d == 1 {
            let row = &lw[0];
            prev.par_iter().flat_map_iter(|&p| row.iter().map(move |w| p + w)).collect()
        } else {
            let n = geom.box_count(j + 1) as usize;
            (0..n)
                .into_par_iter()
                .map(|idx| {
                    let b = CAdicBox::from_linear(geom, j + 1, idx);
                    let parent = b.parent().expect("non-root");
                    let tail: f64 = b.k.iter().enumerate().map(|(i, &ki)| lw[i][ki as usize % c]).sum();
                    prev[parent.linear_index()] + tail
                })
                .collect()
        };
        levels.push(next);
    }
    BoxMeasure::from_levels(geom, levels, Some(MeasureSpec::Multinomial(spec.clone())), None)
}
