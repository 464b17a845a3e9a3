//! Jarnik–Besicovitch experiment: rationals whose b-adic digit frequencies match π,
//! contracted by δ, against the dimension (Σ −π_i log_b π_i)/δ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measures::MultinomialSpec;
use crate::selection::{limsup_boxcount, BoxCountOptions, DimEstimate, EpsSpec, IndexBracket, SelectionResult, SelectionSpec};
use crate::systems::{gen_rationals, rational_labels, RadiusMode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JarnikConfig {
    pub b: u32,
    pub pi: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Finest box generation J.
    pub depth: u32,
    /// Frequencies over n digits may deviate by ε/√n; ε = 0 keeps only the nearest attainable frequency.
    pub eps: f64,
    /// Scale classes in each regression.
    pub window: u32,
}

impl JarnikConfig {
    pub fn new(b: u32, pi: Vec<f64>, deltas: Vec<f64>, depth: u32) -> Self {
        Self { b, pi, deltas, depth, eps: 0.25, window: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 2 || self.pi.len() != self.b as usize {
            return domain(format!("π needs {} entries for base {}", self.b, self.b));
        }
        if self.pi.iter().any(|&p| !(p > 0.0)) || (self.pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return domain("π must be positive and sum to 1");
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|&d| !(d >= 1.0)) {
            return domain("every δ must be at least 1");
        }
        if !(self.eps >= 0.0) || self.depth < 4 {
            return domain("ε must be non-negative and the depth at least 4");
        }
        Ok(())
    }

    /// Σ −π_i log_b π_i.
    pub fn entropy(&self) -> f64 {
        let lb = (self.b as f64).ln();
        self.pi.iter().map(|&p| -p * p.ln() / lb).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JarnikRow {
    pub delta: f64,
    pub measured: Option<f64>,
    pub theoretical: f64,
    pub estimate: DimEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JarnikReport {
    pub config: JarnikConfig,
    pub q_max: u64,
    pub pairs: usize,
    pub selected: usize,
    pub rows: Vec<JarnikRow>,
    pub notes: Vec<String>,
}

/// Digit counts of the first n b-adic digits of p/q, by exact long division.
pub fn digit_counts(p: u64, q: u64, b: u32, n: u32) -> Vec<u32> {
    let mut counts = vec![0u32; b as usize];
    let mut r = (p % q) as u128;
    for _ in 0..n {
        r *= b as u128;
        counts[(r / q as u128) as usize] += 1;
        r %= q as u128;
    }
    counts
}

/// Number of digits examined for denominator q: ⌊log_b q²⌋, exact.
pub fn digit_window(q: u64, b: u32) -> u32 {
    let q2 = (q as u128) * (q as u128);
    let mut n = 0;
    let mut pow = b as u128;
    while pow <= q2 {
        n += 1;
        pow *= b as u128;
    }
    n
}

pub fn demo_jarnik_besicovitch(cfg: &JarnikConfig) -> Result<JarnikReport> {
    cfg.validate()?;
    let b = cfg.b;
    let d_min = cfg.deltas.iter().copied().fold(f64::INFINITY, f64::min);
    // Classes with contracted scale up to J need λ down to about b^{-J/δ_min}.
    let q_max = ((b as f64).powf((cfg.depth as f64 / d_min + 1.0) / 2.0)).ceil() as u64;
    let system = gen_rationals(q_max, 1, true, RadiusMode::Hurwitz, usize::MAX)?;
    let labels = rational_labels(q_max, 1, true);
    // Cylinder exponents −log_b μ(I_n(p/q))/n under multinomial(π).
    let log_pi = MultinomialSpec::new(b, vec![cfg.pi.clone()])?.log_weights().remove(0);
    let theory = cfg.entropy();
    let selected: Vec<IndexBracket> = labels
        .par_iter()
        .enumerate()
        .filter_map(|(n, (p, q))| {
            select_rational(p[0], *q, cfg, &log_pi).map(|(e, tol)| IndexBracket { n, exponent_lo: e, exponent_hi: e, eps: tol })
        })
        .collect();
    let spec = SelectionSpec { rho: 1.0, alpha: theory, eps: EpsSpec::Constant { value: cfg.eps }, delta: 1.0, margin: 0 };
    let base = SelectionResult { spec, selected, indeterminate: Vec::new(), rejected: 0, errors: Vec::new() };
    let rows = cfg
        .deltas
        .iter()
        .map(|&delta| {
            let mut sel = base.clone();
            sel.spec.delta = delta;
            let opts = BoxCountOptions { c: b, tails: vec![0], j_top: Some(cfg.depth), window: cfg.window, tau_star: theory };
            let estimate = limsup_boxcount(&system, &sel, &opts);
            JarnikRow { delta, measured: estimate.slope, theoretical: theory / delta, estimate }
        })
        .collect();
    Ok(JarnikReport {
        config: cfg.clone(),
        q_max,
        pairs: system.len(),
        selected: base.selected.len(),
        rows,
        notes: vec!["measured slopes are box-count upper estimates at a finite depth".to_string()],
    })
}

fn select_rational(p: u64, q: u64, cfg: &JarnikConfig, log_pi: &[f64]) -> Option<(f64, f64)> {
    let window = digit_window(q, cfg.b);
    if window == 0 {
        return None;
    }
    let counts = digit_counts(p, q, cfg.b, window);
    let n = window as f64;
    let tol = if cfg.eps == 0.0 { 0.5 / n + 1e-12 } else { cfg.eps / n.sqrt() };
    counts
        .iter()
        .zip(&cfg.pi)
        .all(|(&k, &pi)| (k as f64 / n - pi).abs() <= tol)
        .then(|| (-counts.iter().zip(log_pi).map(|(&k, &lp)| k as f64 * lp).sum::<f64>() / (n * (cfg.b as f64).ln()), tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn long_division_digits() {
        // 1/3 = 0.010101… in base 2, 2/7 = 0.010 010 …
        assert_eq!(digit_counts(1, 3, 2, 6), vec![3, 3]);
        assert_eq!(digit_counts(2, 7, 2, 9), vec![6, 3]);
        assert_eq!(digit_counts(1, 4, 10, 4), vec![2, 0, 1, 0, 0, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn digit_window_is_floor_log() {
        assert_eq!(digit_window(1, 2), 0);
        assert_eq!(digit_window(2, 2), 2);
        assert_eq!(digit_window(3, 2), 3);
        assert_eq!(digit_window(4, 2), 4);
        assert_eq!(digit_window(10, 10), 2);
        assert_eq!(digit_window(9, 10), 1);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(JarnikConfig::new(2, vec![0.5, 0.6], vec![1.0], 10).validate().is_err());
        assert!(JarnikConfig::new(3, vec![0.5, 0.5], vec![1.0], 10).validate().is_err());
        assert!(JarnikConfig::new(2, vec![0.5, 0.5], vec![0.5], 10).validate().is_err());
    }
}
