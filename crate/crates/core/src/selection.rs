//! Conditioned selection of indices and box-count exponents of limsup approximants.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::measures::{ball_mass, BoxMeasure};
use crate::numerics::{fit_line, LineFit};
use crate::spectrum::{dim_formula, eps_schedule, theorem1_upper_bound, Bound, GaugeParams};
use crate::systems::{dyadic_class, PointScaleSystem};

/// Tolerance sequence ε_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "eps", rename_all = "snake_case")]
pub enum EpsSpec {
    Constant { value: f64 },
    List { values: Vec<f64> },
    /// ε from the defining identity with constant M and the given gauges.
    Schedule { m: f64, gauges: GaugeParams },
}

impl Default for EpsSpec {
    fn default() -> Self {
        EpsSpec::Schedule { m: 2.0, gauges: GaugeParams::default() }
    }
}

impl EpsSpec {
    pub fn value(&self, n: usize, lambda: f64, alpha: f64, rho: f64) -> Result<f64> {
        let e = match self {
            EpsSpec::Constant { value } => *value,
            EpsSpec::List { values } => *values.get(n).ok_or_else(|| crate::Error::Domain(format!("no ε for index {n}")))?,
            EpsSpec::Schedule { m, gauges } => eps_schedule(*m, alpha, gauges, lambda, rho)?,
        };
        if !(e >= 0.0) {
            return domain(format!("ε_{n} = {e} is negative"));
        }
        Ok(e)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub rho: f64,
    pub alpha: f64,
    pub eps: EpsSpec,
    pub delta: f64,
    pub margin: u32,
}

impl SelectionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return domain("ρ must lie in (0,1]");
        }
        if !(self.alpha >= 0.0) {
            return domain("α must be non-negative");
        }
        if !(self.delta >= 1.0) {
            return domain("δ must be at least 1");
        }
        Ok(())
    }
}

/// Verdict and exponent bracket of one index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexBracket {
    pub n: usize,
    pub exponent_lo: f64,
    pub exponent_hi: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub spec: SelectionSpec,
    pub selected: Vec<IndexBracket>,
    pub indeterminate: Vec<IndexBracket>,
    pub rejected: usize,
    pub errors: Vec<(usize, String)>,
}

impl SelectionResult {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.selected.iter().map(|b| b.n).collect()
    }

    /// Number of selected indices in each scale class T_j.
    pub fn counts_by_class(&self, system: &PointScaleSystem) -> BTreeMap<i32, usize> {
        let mut out = BTreeMap::new();
        for b in &self.selected {
            *out.entry(dyadic_class(system.lambda(b.n))).or_insert(0) += 1;
        }
        out
    }
}

enum Verdict {
    Selected(IndexBracket),
    Indeterminate(IndexBracket),
    Rejected,
    Error(String),
}

/// Keeps n when the mass bracket certifies α − ε_n ≤ log μ(B(x_n, λ_n^ρ)) / (ρ log λ_n) ≤ α + ε_n.
pub fn select(system: &PointScaleSystem, mu: &BoxMeasure, spec: &SelectionSpec) -> Result<SelectionResult> {
    spec.validate()?;
    let verdicts: Vec<Verdict> = (0..system.len())
        .into_par_iter()
        .map(|n| {
            let lambda = system.lambda(n);
            if lambda >= 1.0 {
                return Verdict::Error("scale not below 1".into());
            }
            let eps = match spec.eps.value(n, lambda, spec.alpha, spec.rho) {
                Ok(e) => e,
                Err(e) => return Verdict::Error(e.to_string()),
            };
            let br = match ball_mass(mu, system.point(n), lambda.powf(spec.rho), spec.margin) {
                Ok(b) => b,
                Err(e) => return Verdict::Error(e.to_string()),
            };
            let denom = spec.rho * lambda.ln();
            let exponent_lo = br.upper / denom;
            let exponent_hi = if br.lower == f64::NEG_INFINITY { f64::INFINITY } else { br.lower / denom };
            let ib = IndexBracket { n, exponent_lo, exponent_hi, eps };
            let (lo, hi) = (spec.alpha - eps, spec.alpha + eps);
            if exponent_lo >= lo && exponent_hi <= hi {
                Verdict::Selected(ib)
            } else if exponent_hi < lo || exponent_lo > hi {
                Verdict::Rejected
            } else {
                Verdict::Indeterminate(ib)
            }
        })
        .collect();
    let mut out = SelectionResult { spec: spec.clone(), selected: Vec::new(), indeterminate: Vec::new(), rejected: 0, errors: Vec::new() };
    for (n, v) in verdicts.into_iter().enumerate() {
        match v {
            Verdict::Selected(b) => out.selected.push(b),
            Verdict::Indeterminate(b) => out.indeterminate.push(b),
            Verdict::Rejected => out.rejected += 1,
            Verdict::Error(e) => out.errors.push((n, e)),
        }
    }
    Ok(out)
}

/// Boxes met by the balls of one scale class T_j.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleCount {
    pub class: i32,
    /// −log_c of the largest ball diameter in the class.
    pub scale: f64,
    /// Box generation ⌊scale⌋ used for counting.
    pub generation: u32,
    pub balls: usize,
    pub count: u64,
}

/// Box counts of one tail of the selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub n_tail: usize,
    /// Generation-J boxes meeting the union of all contracted balls B(x_n, λ_n^δ), n ≥ N_tail.
    pub union_counts: Vec<(u32, u64)>,
    /// Per scale class, boxes meeting the contracted balls B(x_n, λ_n^δ) at their own scale.
    pub fine_counts: Vec<ScaleCount>,
    /// Per scale class, boxes meeting the dilated balls B(x_n, λ_n^ρ) at their own scale.
    pub coarse_counts: Vec<ScaleCount>,
    pub fine_fit: Option<LineFit>,
    pub coarse_fit: Option<LineFit>,
    /// min of the two cover exponents that could be fitted.
    pub slope: Option<f64>,
    /// Every window class lies entirely in the tail and is non-empty.
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimEstimate {
    pub c: u32,
    pub delta: f64,
    pub rho: f64,
    pub j_top: u32,
    /// Scale classes entering the regressions.
    pub classes: Vec<i32>,
    pub tails: Vec<TailEstimate>,
    /// Slope of the deepest complete tail, else of the first tail.
    pub slope: Option<f64>,
    pub bound: Bound,
    pub gap: Option<f64>,
}

/// Options for [`limsup_boxcount`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCountOptions {
    pub c: u32,
    pub tails: Vec<usize>,
    /// Finest generation J; defaults to max(8, ⌈δ log_c(1/λ_min)⌉ − 2).
    pub j_top: Option<u32>,
    /// Number of scale classes in the regression window.
    pub window: u32,
    /// τ*(α) used for the theoretical bound.
    pub tau_star: f64,
}

impl Default for BoxCountOptions {
    fn default() -> Self {
        Self { c: 2, tails: vec![0], j_top: None, window: 8, tau_star: f64::NAN }
    }
}

fn scale_of(diam: f64, c: u32) -> f64 {
    -diam.ln() / (c as f64).ln()
}

/// Number of generation-J boxes meeting the union of open balls.
fn union_box_count(balls: &[(&[f64], f64)], j: u32, c: u32) -> u64 {
    let side = (c as f64).powi(j as i32);
    let max_k = side as i64 - 1;
    let range = |x: f64, r: f64| -> Option<(i64, i64)> {
        let lo = (((x - r) * side).floor() as i64).max(0);
        let hi = ((((x + r) * side).ceil() as i64) - 1).min(max_k);
        (lo <= hi).then_some((lo, hi))
    };
    if balls.first().is_none_or(|b| b.0.len() == 1) {
        let mut iv: Vec<(i64, i64)> = balls.iter().filter_map(|b| range(b.0[0], b.1)).collect();
        iv.sort_unstable();
        let mut total = 0u64;
        let mut cur: Option<(i64, i64)> = None;
        for (lo, hi) in iv {
            match cur {
                Some((a, b)) if lo <= b + 1 => cur = Some((a, b.max(hi))),
                Some((a, b)) => {
                    total += (b - a + 1) as u64;
                    cur = Some((lo, hi));
                }
                None => cur = Some((lo, hi)),
            }
        }
        if let Some((a, b)) = cur {
            total += (b - a + 1) as u64;
        }
        return total;
    }
    let mut set = std::collections::HashSet::new();
    for b in balls {
        let ranges: Option<Vec<(i64, i64)>> = b.0.iter().map(|&x| range(x, b.1)).collect();
        let Some(ranges) = ranges else { continue };
        let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            set.insert(k.clone());
            for axis in (0..k.len()).rev() {
                if k[axis] < ranges[axis].1 {
                    k[axis] += 1;
                    continue 'outer;
                }
                k[axis] = ranges[axis].0;
            }
            break;
        }
    }
    set.len() as u64
}

/// Default finest generation max(8, ⌈δ log_c(1/λ_min)⌉ − 2).
pub fn default_j_top(lambda_min: f64, delta: f64, c: u32) -> u32 {
    let v = (delta * (1.0 / lambda_min).ln() / (c as f64).ln()).ceil() as i64 - 2;
    v.max(8) as u32
}

fn class_count(system: &PointScaleSystem, members: &[usize], exponent: f64, class: i32, c: u32) -> ScaleCount {
    let balls: Vec<(&[f64], f64)> = members.iter().map(|&n| (system.point(n), system.lambda(n).powf(exponent))).collect();
    let r_max = balls.iter().map(|b| b.1).fold(0.0, f64::max);
    let scale = if balls.is_empty() { 0.0 } else { scale_of(2.0 * r_max, c) };
    let generation = scale.floor().max(0.0) as u32;
    ScaleCount { class, scale, generation, balls: balls.len(), count: union_box_count(&balls, generation, c) }
}

fn fit_counts(counts: &[ScaleCount], c: u32) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> =
        counts.iter().filter(|p| p.count > 0).map(|p| (p.scale, (p.count as f64).ln() / (c as f64).ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_line(&xs, &ys)
}

/// Box-count exponents of the tail unions of a selection.
///
/// Each scale class T_j is covered twice at its own scale: by the contracted balls
/// B(x_n, λ_n^δ) and by the dilated balls B(x_n, λ_n^ρ). log_c of the box counts is regressed
/// on the scale over the deepest `window` classes whose contracted scale does not exceed J.
/// Either family covers the tail union, so each slope is an upper estimate of the dimension;
/// the reported slope is the smaller one.
pub fn limsup_boxcount(system: &PointScaleSystem, selection: &SelectionResult, opts: &BoxCountOptions) -> DimEstimate {
    let SelectionSpec { rho, delta, .. } = selection.spec;
    let c = opts.c;
    let mut by_class: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for b in &selection.selected {
        by_class.entry(dyadic_class(system.lambda(b.n))).or_default().push(b.n);
    }
    let lambda_min = selection.selected.iter().map(|b| system.lambda(b.n)).fold(f64::INFINITY, f64::min);
    let lambda_min = if lambda_min.is_finite() { lambda_min } else { system.lambda_min().unwrap_or(0.5) };
    let j_top = opts.j_top.unwrap_or_else(|| default_j_top(lambda_min, delta, c));
    let window = opts.window.max(3) as usize;
    let eligible: Vec<i32> = by_class
        .iter()
        .filter(|(_, ns)| {
            let r = ns.iter().map(|&n| system.lambda(n)).fold(0.0, f64::max).powf(delta);
            scale_of(2.0 * r, c) <= j_top as f64
        })
        .map(|(&j, _)| j)
        .collect();
    let classes: Vec<i32> = eligible[eligible.len().saturating_sub(window)..].to_vec();
    let tails: Vec<TailEstimate> = opts
        .tails
        .par_iter()
        .map(|&n_tail| {
            let mut complete = true;
            let mut fine_counts = Vec::with_capacity(classes.len());
            let mut coarse_counts = Vec::with_capacity(classes.len());
            for &j in &classes {
                let all = &by_class[&j];
                let members: Vec<usize> = all.iter().copied().filter(|&n| n >= n_tail).collect();
                complete &= !members.is_empty() && members.len() == all.len();
                fine_counts.push(class_count(system, &members, delta, j, c));
                coarse_counts.push(class_count(system, &members, rho, j, c));
            }
            let contracted: Vec<(&[f64], f64)> = selection
                .selected
                .iter()
                .filter(|b| b.n >= n_tail)
                .map(|b| (system.point(b.n), system.lambda(b.n).powf(delta)))
                .collect();
            let lo = j_top.saturating_sub(window as u32 - 1);
            let union_counts = (lo..=j_top).map(|j| (j, union_box_count(&contracted, j, c))).collect();
            let fine_fit = fit_counts(&fine_counts, c);
            let coarse_fit = fit_counts(&coarse_counts, c);
            let slope = match (fine_fit, coarse_fit) {
                (Some(a), Some(b)) => Some(a.slope.min(b.slope).max(0.0)),
                (Some(a), None) => Some(a.slope.max(0.0)),
                (None, Some(b)) => Some(b.slope.max(0.0)),
                (None, None) => None,
            };
            TailEstimate { n_tail, union_counts, fine_counts, coarse_counts, fine_fit, coarse_fit, slope, complete }
        })
        .collect();
    let slope = tails.iter().rev().find(|t| t.complete).or_else(|| tails.first()).and_then(|t| t.slope);
    let bound = if opts.tau_star.is_nan() {
        Bound::Empty
    } else {
        theorem1_upper_bound(opts.tau_star, rho, delta, system.d())
    };
    let gap = match (slope, bound) {
        (Some(s), Bound::Value(b)) => Some(s - b),
        _ => None,
    };
    DimEstimate { c, delta, rho, j_top, classes, tails, slope, bound, gap }
}

/// One row of a δ scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationRow {
    pub delta: f64,
    pub slope: Option<f64>,
    pub theory: f64,
    pub plateau: bool,
}

/// Runs [`limsup_boxcount`] over a δ grid next to D(τ*(α), ρ, δ).
pub fn saturation_scan(
    system: &PointScaleSystem,
    selection: &SelectionResult,
    deltas: &[f64],
    opts: &BoxCountOptions,
) -> Result<Vec<SaturationRow>> {
    let rho = selection.spec.rho;
    if rho >= 1.0 {
        return domain("saturation scan needs ρ < 1");
    }
    let d = system.d();
    Ok(deltas
        .iter()
        .map(|&delta| {
            let mut sel = selection.clone();
            sel.spec.delta = delta;
            let est = limsup_boxcount(system, &sel, opts);
            let f = dim_formula(opts.tau_star, rho, delta, d);
            SaturationRow { delta, slope: est.slope, theory: f.value, plateau: f.saturated }
        })
        .collect())
}
