//! Weak-redundancy estimates and the irrationality-measure criterion for {nα}.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::fit_line;
use crate::systems::{bucket, gen_nalpha, AlphaSpec, ContinuedFraction, PointScaleSystem, DEFAULT_BUDGET};

/// Redundancy figures for one scale class T_j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub j: i32,
    pub count: usize,
    /// Largest number of balls sharing a point (exact for d = 1, sampled otherwise).
    pub multiplicity: usize,
    /// Number of disjoint subfamilies: exact for d = 1, greedy upper bound otherwise.
    pub colors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub levels: Vec<LevelReport>,
    /// Least-squares slope of log2 N_j against j over non-empty levels, clamped at 0.
    pub slope: f64,
    /// max_j log2 N_j / j over the range.
    pub max_ratio: f64,
    pub threshold: f64,
    /// Slope below threshold: an estimate, weak redundancy is asymptotic.
    pub weakly_redundant: bool,
}

/// Default slope threshold for the verdict.
pub const SLOPE_THRESHOLD: f64 = 0.1;

/// Maximum overlap depth of open intervals (x − λ, x + λ).
pub fn max_overlap_1d(intervals: &[(f64, f64)]) -> usize {
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * intervals.len());
    for &(a, b) in intervals {
        events.push((a, 1));
        events.push((b, -1));
    }
    // Ends sort before starts at equal coordinates: open intervals touching at a point do not overlap.
    events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let (mut depth, mut best) = (0i32, 0i32);
    for (_, e) in events {
        depth += e;
        best = best.max(depth);
    }
    best as usize
}

fn open_boxes_meet(a: &[f64], ra: f64, b: &[f64], rb: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < ra + rb)
}

fn point_in_ball(p: &[f64], c: &[f64], r: f64) -> bool {
    p.iter().zip(c).all(|(x, y)| (x - y).abs() < r)
}

/// [sampled multiplicity, greedy first-fit colour count] for sup-norm balls.
fn bracket_nd(balls: &[(&[f64], f64)]) -> (usize, usize) {
    if balls.is_empty() {
        return (0, 0);
    }
    let rmax = balls.iter().map(|b| b.1).fold(0.0, f64::max);
    let cell = 2.0 * rmax;
    let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, b) in balls.iter().enumerate() {
        grid.entry(key(b.0)).or_default().push(i);
    }
    let near = |x: &[f64]| -> Vec<usize> {
        let base = key(x);
        let d = base.len();
        let mut out = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let mut k = base.clone();
            let mut c = code;
            for slot in k.iter_mut() {
                *slot += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(v) = grid.get(&k) {
                out.extend_from_slice(v);
            }
        }
        out
    };
    // Centres give a lower bound on the multiplicity.
    let mult = balls
        .iter()
        .map(|b| near(b.0).into_iter().filter(|&i| point_in_ball(b.0, balls[i].0, balls[i].1)).count())
        .max()
        .unwrap_or(0);
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| {
        balls[a].0.iter().zip(balls[b].0).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut color = vec![usize::MAX; balls.len()];
    let mut used = 0;
    for &i in &order {
        let taken: Vec<usize> = near(balls[i].0)
            .into_iter()
            .filter(|&o| color[o] != usize::MAX && open_boxes_meet(balls[i].0, balls[i].1, balls[o].0, balls[o].1))
            .map(|o| color[o])
            .collect();
        let c = (0..).find(|c| !taken.contains(c)).expect("some colour is free");
        color[i] = c;
        used = used.max(c + 1);
    }
    (mult.min(used), used)
}

/// Per-level redundancy over `j_range` (inclusive) and the growth slope.
pub fn analyze(system: &PointScaleSystem, j_range: (i32, i32)) -> RedundancyReport {
    let buckets = bucket(system);
    let d = system.d();
    let levels: Vec<LevelReport> = (j_range.0..=j_range.1)
        .into_par_iter()
        .map(|j| {
            let idx = buckets.get(j);
            let (multiplicity, colors) = if d == 1 {
                let iv: Vec<(f64, f64)> = idx.iter().map(|&n| {
                    let (x, l) = (system.point(n)[0], system.lambda(n));
                    (x - l, x + l)
                }).collect();
                let m = max_overlap_1d(&iv);
                (m, m)
            } else {
                let balls: Vec<(&[f64], f64)> = idx.iter().map(|&n| (system.point(n), system.lambda(n))).collect();
                bracket_nd(&balls)
            };
            LevelReport { j, count: idx.len(), multiplicity, colors }
        })
        .collect();
    summarize(levels, SLOPE_THRESHOLD)
}

fn summarize(levels: Vec<LevelReport>, threshold: f64) -> RedundancyReport {
    let pts: Vec<(f64, f64)> =
        levels.iter().filter(|l| l.colors > 0).map(|l| (l.j as f64, (l.colors as f64).log2())).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    let slope = fit_line(&xs, &ys).map_or(0.0, |f| f.slope.max(0.0));
    let max_ratio = pts.iter().filter(|p| p.0 > 0.0).map(|p| p.1 / p.0).fold(0.0, f64::max);
    RedundancyReport { levels, slope, max_ratio, threshold, weakly_redundant: slope < threshold }
}

/// Convergent-based exponents ξ_k and the tail estimate of the irrationality measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrationalityEstimate {
    pub expansion: ContinuedFraction,
    pub xi_k: Vec<(usize, f64)>,
    /// Maximum of ξ_k over the last quarter of the available exponents.
    pub estimate: f64,
}

pub fn irrationality_measure(alpha: &AlphaSpec, k_max: usize) -> Result<IrrationalityEstimate> {
    let expansion = alpha.continued_fraction(k_max)?;
    let xi_k = expansion.exponents();
    let tail = (xi_k.len() / 4).max(1).min(xi_k.len());
    let estimate = xi_k[xi_k.len() - tail..].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(IrrationalityEstimate { expansion, xi_k, estimate })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NalphaCrossCheck {
    pub report: RedundancyReport,
    pub irrationality: IrrationalityEstimate,
    /// Both paths agree: small slope exactly when the estimate is near 2.
    pub agree: bool,
}

/// Runs the redundancy analysis of ({nα}, 1/n) next to the irrationality estimate.
pub fn nalpha_redundancy_crosscheck(alpha: &AlphaSpec, n_max: u64, j_range: (i32, i32)) -> Result<NalphaCrossCheck> {
    let irrationality = irrationality_measure(alpha, 64)?;
    let system = gen_nalpha(alpha, n_max, DEFAULT_BUDGET)?;
    let report = analyze(&system, j_range);
    let small_slope = report.slope < 0.05;
    let near_two = irrationality.estimate <= 2.05;
    Ok(NalphaCrossCheck { agree: small_slope == near_two, report, irrationality })
}
