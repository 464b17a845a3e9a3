use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{box_in_ball, ratio, Radius};
use super::{CantorNode, CantorTree};
use crate::numerics::{fit_line, kendall_trend, log_sum_exp, LineFit, TrendTest};
use crate::rng::keyed;
use crate::spectrum::{dim_formula, GaugeParams};

/// Record-by-record check of the tree invariants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub nesting: bool,
    pub disjoint: bool,
    pub separation: bool,
    pub containment: bool,
    /// Largest |ln Σ children − ln parent| over all nodes with children.
    pub conservation_defect: f64,
    /// Exact equality of rational masses, when present.
    pub conservation_exact: Option<bool>,
    pub iv_all: bool,
    pub schedule_monotone: bool,
    /// Every leaf sits inside a witness ball whose (pm) audit passed.
    pub pm_witnessed: bool,
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn ok(&self) -> bool {
        self.nesting
            && self.disjoint
            && self.separation
            && self.containment
            && self.conservation_defect <= 1e-12
            && self.conservation_exact != Some(false)
            && self.iv_all
            && self.schedule_monotone
            && self.pm_witnessed
    }
}

const MAX_VIOLATIONS: usize = 20;

pub fn check_invariants(tree: &CantorTree) -> InvariantReport {
    let c = tree.c();
    let degenerate = tree.notes.iter().any(|n| n.starts_with("δ = 1"));
    let mut rep = InvariantReport {
        nesting: true,
        disjoint: true,
        separation: true,
        containment: true,
        conservation_defect: 0.0,
        conservation_exact: None,
        iv_all: true,
        schedule_monotone: true,
        pm_witnessed: true,
        violations: Vec::new(),
    };
    let mut note = |rep: &mut InvariantReport, msg: String| {
        if rep.violations.len() < MAX_VIOLATIONS {
            rep.violations.push(msg);
        }
    };
    let schedule: Vec<f64> = tree.generations.iter().filter_map(|g| g.first().map(|n| n.d_p)).collect();
    if schedule.windows(2).any(|w| w[1] < w[0]) || schedule.iter().any(|&x| x > tree.config.delta + 1e-12) {
        rep.schedule_monotone = false;
        note(&mut rep, "dilation schedule is not non-decreasing within [1, δ]".into());
    }
    for (p, generation) in tree.generations.iter().enumerate() {
        for (i, n) in generation.iter().enumerate() {
            if p > 0 {
                let parent = n.parent.and_then(|pi| tree.generations[p - 1].get(pi));
                if !parent.is_some_and(|l| l.cell.contains_box(&n.cell, c)) {
                    rep.nesting = false;
                    note(&mut rep, format!("generation {} node {i} is not inside its parent", p + 1));
                }
            }
            let r = Radius::power(&n.witness.lambda, n.d_p);
            let enclosed = degenerate
                || n.witness.center.iter().zip(&n.enclosing.center).all(|(a, b)| {
                    let gap = if a > b { a - b } else { b - a };
                    r.surely_at_most(&(&n.enclosing.radius - gap))
                });
            let inside = if degenerate {
                box_in_ball(&n.cell, &n.witness.center, &Radius::exact(n.witness.lambda.clone()), c)
            } else {
                box_in_ball(&n.cell, &n.witness.center, &r, c)
            };
            if !(inside && enclosed && n.audit.contained) {
                rep.containment = false;
                note(&mut rep, format!("generation {} node {i} breaks I ⊆ B(x, λ^d) ⊆ Ī", p + 1));
            }
            if !degenerate && !n.audit.iv_pass {
                rep.iv_all = false;
                note(&mut rep, format!("generation {} node {i} fails property (iv)", p + 1));
            }
            if !degenerate && n.audit.pm_depths.is_none() {
                rep.pm_witnessed = false;
            }
        }
        check_disjoint(generation, c, p, degenerate, &mut rep, &mut note);
    }
    // Mass conservation between consecutive generations.
    let mut exact_ok = None;
    for p in 0..tree.generations.len() {
        let parents: Vec<(f64, Option<BigRational>)> = if p == 0 {
            vec![(0.0, tree.generations[0].first().and_then(|n| n.mass.as_ref().map(|_| BigRational::from_integer(1.into()))))]
        } else {
            tree.generations[p - 1].iter().map(|n| (n.log_mass, n.mass.clone())).collect()
        };
        let mut groups: Vec<Vec<&CantorNode>> = vec![Vec::new(); parents.len()];
        for n in &tree.generations[p] {
            groups[n.parent.unwrap_or(0)].push(n);
        }
        for (pi, kids) in groups.iter().enumerate() {
            if kids.is_empty() {
                continue;
            }
            let lse = log_sum_exp(&kids.iter().map(|n| n.log_mass).collect::<Vec<_>>());
            rep.conservation_defect = rep.conservation_defect.max((lse - parents[pi].0).abs());
            if let Some(pm) = &parents[pi].1 {
                let s = kids.iter().fold(BigRational::zero(), |a, n| a + n.mass.clone().unwrap_or_default());
                let eq = &s == pm;
                exact_ok = Some(exact_ok.unwrap_or(true) && eq);
            }
        }
    }
    rep.conservation_exact = exact_ok;
    if rep.conservation_defect > 1e-12 {
        let msg = format!("mass conservation defect {:.3e}", rep.conservation_defect);
        note(&mut rep, msg);
    }
    rep
}

fn check_disjoint(
    generation: &[CantorNode],
    c: u32,
    p: usize,
    touching_allowed: bool,
    rep: &mut InvariantReport,
    note: &mut impl FnMut(&mut InvariantReport, String),
) {
    let mut order: Vec<usize> = (0..generation.len()).collect();
    let lo = |n: &CantorNode| n.cell.corner(c)[0].clone();
    let corners: Vec<BigRational> = generation.iter().map(lo).collect();
    order.sort_by(|&a, &b| corners[a].cmp(&corners[b]));
    let max_radius = generation.iter().map(|n| n.enclosing.radius.clone()).max().unwrap_or_default();
    let two_thirds = &max_radius * BigRational::new(2.into(), 3.into());
    for (oi, &a) in order.iter().enumerate() {
        let na = &generation[a];
        let hi_a = &corners[a] + na.cell.side(c);
        for &b in &order[oi + 1..] {
            let nb = &generation[b];
            let axis_gap = &corners[b] - &hi_a;
            if axis_gap > two_thirds {
                break;
            }
            let gap = na.cell.gap(&nb.cell, c);
            let overlap = if touching_allowed { gap < BigRational::zero() || interiors_meet(na, nb, c) } else { gap <= BigRational::zero() };
            if overlap {
                rep.disjoint = false;
                note(rep, format!("generation {} nodes {a} and {b} intersect", p + 1));
                continue;
            }
            let same_ball = na.parent == nb.parent && na.enclosing.center == nb.enclosing.center;
            if na.d_p > 1.0 && !same_ball {
                let need = std::cmp::max(&na.enclosing.radius, &nb.enclosing.radius) * BigRational::new(2.into(), 3.into());
                if gap < need {
                    rep.separation = false;
                    note(rep, format!("generation {} nodes {a} and {b} are closer than max|Ī|/3", p + 1));
                }
            }
        }
    }
}

/// Whether two closed boxes share interior points.
fn interiors_meet(a: &CantorNode, b: &CantorNode, c: u32) -> bool {
    let (ca, cb) = (a.cell.corner(c), b.cell.corner(c));
    let (sa, sb) = (a.cell.side(c), b.cell.side(c));
    ca.iter().zip(&cb).all(|(x, y)| x < &(y + &sb) && y < &(x + &sa))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub gauges: GaugeParams,
    pub balls: usize,
    pub seed: u64,
    /// Exponent tested instead of D(β, ρ, δ).
    pub exponent: Option<f64>,
}

impl AuditOptions {
    pub fn new(gauges: GaugeParams, balls: usize) -> Self {
        Self { gauges, balls, seed: 0, exponent: None }
    }
}

/// Largest log-ratio ln m_δ(B) − (D − ξ(|B|)) ln|B| among the sampled balls of one decade of |B|.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecadeRow {
    pub decade: u32,
    pub balls: usize,
    pub max_log_ratio: f64,
    pub mean_local_exponent: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingAudit {
    pub exponent: f64,
    pub rows: Vec<DecadeRow>,
    pub trend: TrendTest,
    /// Fit of ln m_δ(B) against ln|B| over balls no smaller than the deepest leaf.
    pub local_fit: Option<LineFit>,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Leaves on a common fixed-point grid of c^{-res} units.
struct Grid {
    res: u32,
    lo: Vec<Vec<u128>>,
    side: Vec<u128>,
    mass: Vec<f64>,
    order: Vec<usize>,
}

fn to_units(x: &BigRational, res_den: &BigUint) -> u128 {
    let v = (x * BigRational::from_integer(res_den.clone().into())).floor().to_integer();
    v.to_u128().unwrap_or(0)
}

pub fn audit_scaling(tree: &CantorTree, opts: &AuditOptions) -> ScalingAudit {
    let c = tree.c();
    let d = tree.d();
    let cfg = &tree.config;
    let exponent = opts.exponent.unwrap_or_else(|| dim_formula(cfg.beta, cfg.rho, cfg.delta, d).value);
    let mut notes = vec![
        "m_δ is extended uniformly inside each leaf".to_string(),
        "growth control audited with the surrogate start depth in place of n_L".to_string(),
    ];
    let leaves = tree.leaves();
    let lc = (c as f64).ln();
    let max_g = leaves.iter().map(|n| n.cell.g).max().unwrap_or(0);
    let min_g = leaves.iter().map(|n| n.cell.g).min().unwrap_or(0);
    let cap = (120.0 / (c as f64).log2()).floor() as u32;
    let res = (max_g + 8).min(cap);
    if max_g + 8 > cap {
        notes.push(format!("leaves deeper than c^-{res} are rounded to that grid"));
    }
    let res_den = BigUint::from(c).pow(res);
    let grid = {
        let mut g = Grid { res, lo: Vec::new(), side: Vec::new(), mass: Vec::new(), order: Vec::new() };
        for n in leaves {
            g.lo.push(n.cell.corner(c).iter().map(|x| to_units(x, &res_den)).collect());
            g.side.push(to_units(&ratio(BigUint::from(1u32), BigUint::from(c).pow(n.cell.g)), &res_den).max(1));
            g.mass.push(n.log_mass.exp());
        }
        g.order = (0..leaves.len()).collect();
        let lo = g.lo.clone();
        g.order.sort_by_key(|&i| lo[i][0]);
        g
    };
    let max_side = grid.side.iter().copied().max().unwrap_or(1);
    let mut samples: Vec<(u32, f64, f64)> = Vec::with_capacity(opts.balls);
    if !leaves.is_empty() && max_g > 0 {
        for b in 0..opts.balls {
            let mut rng = keyed(opts.seed, 0xA0D1, b as u64);
            let leaf = rng.random_range(0..leaves.len());
            let center: Vec<u128> = (0..d).map(|axis| grid.lo[leaf][axis] + rng.random_range(0..grid.side[leaf])).collect();
            let t = rng.random_range(1..=max_g.min(grid.res));
            let radius = (c as u128).pow(grid.res - t);
            let m = ball_mass(&grid, &center, radius, max_side);
            let ln_diam = (2.0f64).ln() - t as f64 * lc;
            samples.push((t, ln_diam, m.ln()));
        }
    }
    let mut by_decade: std::collections::BTreeMap<u32, Vec<(f64, f64)>> = Default::default();
    for &(_, ln_diam, ln_m) in &samples {
        let decade = (-ln_diam / std::f64::consts::LN_10).floor().max(0.0) as u32;
        by_decade.entry(decade).or_default().push((ln_diam, ln_m));
    }
    let rows: Vec<DecadeRow> = by_decade
        .into_iter()
        .map(|(decade, v)| {
            let ratios = v.iter().map(|&(ld, lm)| lm - (exponent - opts.gauges.xi(ld.exp(), d, cfg.rho)) * ld);
            let max_log_ratio = ratios.fold(f64::NEG_INFINITY, f64::max);
            let mean_local_exponent = v.iter().map(|&(ld, lm)| lm / ld).sum::<f64>() / v.len() as f64;
            DecadeRow { decade, balls: v.len(), max_log_ratio, mean_local_exponent }
        })
        .collect();
    let trend = kendall_trend(&rows.iter().map(|r| r.max_log_ratio).collect::<Vec<_>>());
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|&&(t, _, _)| t >= 1 && t <= min_g)
        .map(|&(_, ld, lm)| (ld, lm))
        .unzip();
    let local_fit = fit_line(&xs, &ys);
    ScalingAudit { exponent, pass: trend.p_increasing >= 0.05, rows, trend, local_fit, notes }
}

/// m_δ(B(center, radius)) with open sup-norm balls in grid units.
fn ball_mass(grid: &Grid, center: &[u128], radius: u128, max_side: u128) -> f64 {
    let lo: Vec<u128> = center.iter().map(|&x| x.saturating_sub(radius)).collect();
    let hi: Vec<u128> = center.iter().map(|&x| x + radius).collect();
    // First leaf whose axis-0 start could reach the ball.
    let start_key = lo[0].saturating_sub(max_side);
    let first = grid.order.partition_point(|&i| grid.lo[i][0] < start_key);
    let mut total = 0.0;
    for &i in &grid.order[first..] {
        if grid.lo[i][0] >= hi[0] {
            break;
        }
        let mut frac = 1.0;
        for axis in 0..center.len() {
            let a = grid.lo[i][axis];
            let b = a + grid.side[i];
            let ov = b.min(hi[axis]).saturating_sub(a.max(lo[axis]));
            if ov == 0 {
                frac = 0.0;
                break;
            }
            frac *= ov as f64 / grid.side[i] as f64;
        }
        total += grid.mass[i] * frac;
    }
    total
}
