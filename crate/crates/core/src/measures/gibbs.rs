use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoxMeasure, MeasureSpec};
use crate::cgrid::{CAdicBox, GridGeometry};
use crate::error::{domain, Result};
use crate::numerics::log_sum_exp;

/// One term a·cos(2π⟨f, x⟩ + phase) of a trigonometric potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: Vec<i64>,
    pub phase: f64,
}

/// A bounded (1,…,1)-periodic potential on [0,1)^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Potential {
    Constant { value: f64 },
    /// Constant on each generation-1 cell, row-major over the c^d cells.
    Cells { values: Vec<f64> },
    Trig { terms: Vec<TrigTerm> },
}

impl Potential {
    pub fn eval(&self, x: &[f64], c: u32) -> f64 {
        match self {
            Potential::Constant { value } => *value,
            Potential::Cells { values } => {
                let idx = x.iter().fold(0usize, |acc, &xi| {
                    acc * c as usize + ((xi * c as f64).floor() as usize).min(c as usize - 1)
                });
                values[idx]
            }
            Potential::Trig { terms } => terms
                .iter()
                .map(|t| {
                    let arg: f64 = t.frequency.iter().zip(x).map(|(&f, &xi)| f as f64 * xi).sum();
                    t.amplitude * (std::f64::consts::TAU * arg + t.phase).cos()
                })
                .sum(),
        }
    }
}

/// Finite-depth Gibbs measure μ_n of a potential under T(x) = cx mod 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    pub c: u32,
    pub d: usize,
    pub potential: Potential,
    pub depth: u32,
}

/// Depth-n box mass ∝ e^{S_n φ(x_I)} at the lower-left corner x_I; coarser levels by summation.
///
/// Sampling at the corner is a finite-depth approximation: for Hölder φ with
/// exponent h the error in S_n is O(c^{-h}) per generation relative to the box average.
pub fn build_gibbs_finite(spec: &GibbsSpec, j_max: u32) -> Result<BoxMeasure> {
    let geom = GridGeometry::new(spec.c, spec.d)?;
    let n = spec.depth;
    if n > j_max {
        return domain(format!("depth {n} exceeds stored depth {j_max}"));
    }
    geom.check_depth(j_max)?;
    if let Potential::Cells { values } = &spec.potential {
        if values.len() as u64 != geom.box_count(1) {
            return domain(format!("cell potential needs {} values", geom.box_count(1)));
        }
    }
    let cn = geom.side_count(n) as u128;
    let log_vol = -(n as f64) * spec.d as f64 * (spec.c as f64).ln();
    let weights: Vec<f64> = (0..geom.box_count(n) as usize)
        .into_par_iter()
        .map(|idx| {
            let b = CAdicBox::from_linear(geom, n, idx);
            let mut y = vec![0.0; spec.d];
            let mut s = 0.0;
            let mut pow = 1u128;
            for _ in 0..n {
                for (yi, &ki) in y.iter_mut().zip(&b.k) {
                    *yi = ((ki as u128 * pow) % cn) as f64 / cn as f64;
                }
                s += spec.potential.eval(&y, spec.c);
                pow = (pow * spec.c as u128) % cn.max(1);
            }
            s + log_vol
        })
        .collect();
    let z = log_sum_exp(&weights);
    let depth_n: Vec<f64> = weights.iter().map(|w| w - z).collect();
    let finest = refine_uniform(geom, n, j_max, depth_n);
    BoxMeasure::from_finest(geom, j_max, finest, Some(MeasureSpec::Gibbs(spec.clone())), None)
}

/// Splits each generation-n mass evenly down to generation j_max.
fn refine_uniform(geom: GridGeometry, n: u32, j_max: u32, level: Vec<f64>) -> Vec<f64> {
    if n == j_max {
        return level;
    }
    let extra = j_max - n;
    let share = -(extra as f64) * geom.d as f64 * (geom.c as f64).ln();
    (0..geom.box_count(j_max) as usize)
        .into_par_iter()
        .map(|idx| {
            let b = CAdicBox::from_linear(geom, j_max, idx);
            let scale = geom.side_count(extra);
            let anc = CAdicBox { c: geom.c, j: n, k: b.k.iter().map(|k| k / scale).collect() };
            level[anc.linear_index()] + share
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_multinomial, MultinomialSpec};

    #[test]
    fn constant_potentials_give_lebesgue() {
        for v in [0.0, 2.5] {
            let spec = GibbsSpec { c: 2, d: 1, potential: Potential::Constant { value: v }, depth: 6 };
            let mu = build_gibbs_finite(&spec, 6).unwrap();
            for m in mu.level(6).unwrap() {
                assert!((m + 6.0 * 2f64.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_potential_matches_multinomial() {
        let v = [0.3, -0.9, 0.1];
        let spec = GibbsSpec { c: 3, d: 1, potential: Potential::Cells { values: v.to_vec() }, depth: 7 };
        let mu = build_gibbs_finite(&spec, 7).unwrap();
        let z: f64 = v.iter().map(|x| x.exp()).sum();
        let w = MultinomialSpec::new(3, vec![v.iter().map(|x| x.exp() / z).collect()]).unwrap();
        let oracle = build_multinomial(&w, 7).unwrap();
        for j in 0..=7 {
            for (a, b) in mu.level(j).unwrap().iter().zip(oracle.level(j).unwrap()) {
                assert!((a - b).abs() < 1e-11, "gen {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn trig_potential_normalized() {
        let pot = Potential::Trig { terms: vec![TrigTerm { amplitude: 0.5, frequency: vec![1], phase: 0.2 }] };
        let mu = build_gibbs_finite(&GibbsSpec { c: 2, d: 1, potential: pot, depth: 10 }, 12).unwrap();
        assert!(mu.total_log_mass().abs() < 1e-12);
        assert!(mu.additivity_defect() < 1e-12);
    }
}
