use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::BoxMeasure;
use crate::numerics::{fit_line, LineFit, LogAcc};

/// Scaling-function estimates over a q-grid and a window of generations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub q_grid: Vec<f64>,
    pub j_window: (u32, u32),
    /// `per_scale[i][t]` is τ_j(q_i) at j = j_window.0 + t.
    pub per_scale: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub fits: Vec<LineFit>,
    /// Interior grid indices where the fitted τ fails concavity by more than 1e-6.
    pub concavity_violations: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    /// τ*(α); −∞ marks α outside the slope range of the grid.
    pub tau_star: Vec<f64>,
}

/// Evenly spaced grid from `lo` to `hi` inclusive, steps computed by index.
pub fn q_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// ln Σ_k μ(I_{j,k})^q over boxes of finite log-mass.
pub fn log_partition_sum(mu: &BoxMeasure, q: f64, j: u32) -> Result<f64> {
    let level = mu.level(j)?;
    if q < 0.0 && level.contains(&f64::NEG_INFINITY) {
        return Err(Error::Domain("negative q on a measure with zero-mass boxes".into()));
    }
    Ok(level
        .par_chunks(1 << 14)
        .map(|chunk| {
            let mut acc = LogAcc::default();
            for &v in chunk {
                if v.is_finite() {
                    acc.push(q * v);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(LogAcc::default(), LogAcc::merge)
        .value())
}

/// τ_j(q) = −j^{-1} log_c Σ_k μ(I_{j,k})^q.
pub fn partition_exponent(mu: &BoxMeasure, q: f64, j: u32) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("generation must be at least 1".into()));
    }
    let lc = (mu.geom.c as f64).ln();
    Ok(-log_partition_sum(mu, q, j)? / (j as f64 * lc))
}

/// Least-squares slope of −log_c Σ μ^q against j over `j_window` (inclusive).
pub fn tau_fit(mu: &BoxMeasure, q_grid: &[f64], j_window: (u32, u32)) -> Result<SpectrumTable> {
    let (j0, j1) = j_window;
    if j1 < j0 || j1 - j0 + 1 < 4 {
        return Err(Error::Domain(format!("window {j0}..={j1} has fewer than 4 scales")));
    }
    if j0 == 0 {
        return Err(Error::Domain("window must start at generation 1 or deeper".into()));
    }
    if j1 > mu.j_max {
        return Err(Error::Resolution(format!("window end {j1} beyond stored depth {}", mu.j_max)));
    }
    let lc = (mu.geom.c as f64).ln();
    let js: Vec<f64> = (j0..=j1).map(f64::from).collect();
    let mut per_scale = Vec::with_capacity(q_grid.len());
    let mut tau = Vec::with_capacity(q_grid.len());
    let mut fits = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let ys: Vec<f64> = (j0..=j1)
            .map(|j| log_partition_sum(mu, q, j).map(|s| -s / lc))
            .collect::<Result<_>>()?;
        let fit = fit_line(&js, &ys).expect("at least four distinct scales");
        per_scale.push(ys.iter().zip(&js).map(|(y, j)| y / j).collect());
        tau.push(fit.slope);
        fits.push(fit);
    }
    let concavity_violations = concavity_violations(q_grid, &tau, 1e-6);
    Ok(SpectrumTable {
        q_grid: q_grid.to_vec(),
        j_window,
        per_scale,
        tau,
        fits,
        concavity_violations,
        alpha_grid: Vec::new(),
        tau_star: Vec::new(),
    })
}

pub(crate) fn concavity_violations(xs: &[f64], ys: &[f64], tol: f64) -> Vec<usize> {
    (1..xs.len().saturating_sub(1))
        .filter(|&i| {
            let w = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let chord = ys[i - 1] * (1.0 - w) + ys[i + 1] * w;
            ys[i] < chord - tol
        })
        .collect()
}
