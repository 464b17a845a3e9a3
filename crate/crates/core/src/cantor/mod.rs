//! Generalized Cantor construction: nested generations of closed c-adic boxes
//! carrying a mass distribution m_δ, built from an exactly self-similar system
//! and audited box by box.

mod audit;
mod enumerate;
mod geometry;
mod greedy;
mod mass;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use audit::{audit_scaling, check_invariants, AuditOptions, DecadeRow, InvariantReport, ScalingAudit};
pub use geometry::{box_in_ball, maximal_box_in_ball, ClosedBox, Radius};
pub use greedy::{greedy_disjoint, Ball, GridBall, IntervalBall, SupBall};
pub use mass::exact_weights;

use crate::error::{domain, Error, Result};
use crate::measures::MultinomialSpec;
use crate::numerics::log_sum_exp;
use crate::spectrum::GaugeParams;
use enumerate::{enumerate, rel_log_mass, Audit, Parent, Window};
use geometry::{digits_of, ln_rational, pow_c, ratio};
use mass::rel_exact_mass;

/// Point–scale family the witnesses are drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CantorSystem {
    /// Points k b^{-j} with radii 2 b^{-j}.
    Badic { b: u32 },
}

impl CantorSystem {
    pub fn base(&self) -> u32 {
        match self {
            CantorSystem::Badic { b } => *b,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_search_cap() -> u32 {
    16
}
fn default_pm_const() -> f64 {
    8.0
}
fn default_dm_const() -> f64 {
    8.0
}
fn default_audit_start() -> u32 {
    1
}
fn default_candidate_budget() -> usize {
    4_000_000
}
fn default_node_budget() -> usize {
    2_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorConfig {
    pub system: CantorSystem,
    /// Measure conditioning the witnesses through (pm).
    pub mu: MultinomialSpec,
    /// Analyzing measure; its copies m^L on every box L are exact rescalings.
    pub m: MultinomialSpec,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    /// Dilation exponents d_1 ≤ … ≤ d_N ≤ δ; 1 + (δ−1)(p/N)² when absent.
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub gauges: GaugeParams,
    pub generations: usize,
    /// Extra witness depths tried per box before giving up.
    #[serde(default = "default_search_cap")]
    pub search_cap: u32,
    /// Greedy capture constant; (2c+1)^d when absent.
    #[serde(default)]
    pub k_d: Option<f64>,
    /// M in the (pm) bracket.
    #[serde(default = "default_pm_const")]
    pub pm_const: f64,
    /// M in the (dm) cap.
    #[serde(default = "default_dm_const")]
    pub dm_const: f64,
    /// Relative depth where the (dm) audit starts, standing in for n_L.
    #[serde(default = "default_audit_start")]
    pub audit_start: u32,
    #[serde(default = "default_candidate_budget")]
    pub candidate_budget: usize,
    #[serde(default = "default_node_budget")]
    pub node_budget: usize,
    /// Rational masses (d = 1, c ≤ 3, at most 5 generations).
    #[serde(default)]
    pub exact: bool,
}

impl CantorConfig {
    /// b-adic system with μ = m, α = β = entropy of the weights, default constants.
    pub fn self_similar(weights: MultinomialSpec, delta: f64, generations: usize) -> Self {
        let h = weights.entropy();
        Self {
            system: CantorSystem::Badic { b: weights.c },
            mu: weights.clone(),
            m: weights,
            alpha: h,
            beta: h,
            delta,
            schedule: None,
            rho: 1.0,
            gauges: GaugeParams::default(),
            generations,
            search_cap: default_search_cap(),
            k_d: None,
            pm_const: default_pm_const(),
            dm_const: default_dm_const(),
            audit_start: default_audit_start(),
            candidate_budget: default_candidate_budget(),
            node_budget: default_node_budget(),
            exact: false,
        }
    }

    pub fn c(&self) -> u32 {
        self.system.base()
    }

    pub fn d(&self) -> usize {
        self.m.d()
    }

    pub fn k_d(&self) -> f64 {
        self.k_d.unwrap_or(((2 * self.c() + 1) as f64).powi(self.d() as i32))
    }

    /// The dilation exponent of every generation.
    pub fn dilations(&self) -> Vec<f64> {
        match &self.schedule {
            Some(s) => s.clone(),
            None => {
                let n = self.generations as f64;
                (1..=self.generations).map(|p| 1.0 + (self.delta - 1.0) * (p as f64 / n).powi(2)).collect()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mu.validate()?;
        self.m.validate()?;
        let (c, d) = (self.c(), self.d());
        if self.mu.c != c || self.m.c != c {
            return domain(format!("measures use bases {} and {}, the system uses {c}", self.mu.c, self.m.c));
        }
        if self.mu.d() != d {
            return domain("μ and m live in different dimensions");
        }
        if !(self.beta > 0.0 && self.beta <= d as f64) {
            return domain(format!("β = {} outside (0, {d}]", self.beta));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return domain(format!("α = {} must be a finite non-negative number", self.alpha));
        }
        if !(self.delta >= 1.0 && self.delta.is_finite()) {
            return domain(format!("δ = {} must be at least 1", self.delta));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return domain(format!("ρ = {} outside (0, 1]", self.rho));
        }
        if self.generations == 0 {
            return domain("at least one generation is required");
        }
        if !(self.pm_const >= 1.0 && self.dm_const > 0.0) {
            return domain("(pm) constant must be ≥ 1 and (dm) constant positive");
        }
        let s = self.dilations();
        if s.len() != self.generations {
            return domain(format!("schedule has {} entries for {} generations", s.len(), self.generations));
        }
        if s.iter().any(|&x| !(1.0..=self.delta + 1e-12).contains(&x)) || s.windows(2).any(|w| w[1] < w[0]) {
            return domain("schedule must be non-decreasing within [1, δ]");
        }
        if self.exact && !(d == 1 && c <= 3 && self.generations <= 5) {
            return domain("exact masses need d = 1, c ≤ 3 and at most 5 generations");
        }
        Ok(())
    }
}

/// The (x_n, λ_n) pair certifying a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Grid depth of the witness point.
    pub depth: u32,
    pub center: Vec<BigRational>,
    pub lambda: BigRational,
}

/// The ball Ī attached to a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnclosingBall {
    pub center: Vec<BigRational>,
    pub radius: BigRational,
    /// Number of boxes sharing this ball (#S(Ī) when ρ < 1).
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeAudit {
    /// Absolute depths where (pm) was verified on the witness neighbourhood.
    pub pm_depths: Option<(u32, u32)>,
    /// Depths relative to the parent where (dm) was verified.
    pub dm_depths: Option<(u32, u32)>,
    /// Audit start used in place of n_L.
    pub n_surrogate: u32,
    /// Whether n_surrogate ≤ log_c(|L|^{-1}) φ(|L|) for the parent L.
    pub growth_ok: bool,
    pub iv_exponent: f64,
    pub iv_log_bound: f64,
    pub iv_pass: bool,
    pub contained: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorNode {
    pub parent: Option<usize>,
    pub cell: ClosedBox,
    pub d_p: f64,
    pub witness: Witness,
    pub enclosing: EnclosingBall,
    pub log_mass: f64,
    pub mass: Option<BigRational>,
    pub audit: NodeAudit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub p: usize,
    pub d_p: f64,
    pub nodes: usize,
    pub witness_depths: (u32, u32),
    pub candidates: u64,
    pub kept: u64,
    /// Smallest captured fraction of the candidates' union mass over parents.
    pub min_capture: f64,
    pub capture_ok: bool,
    /// Largest number of extra depths any parent needed.
    pub max_deepening: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorTree {
    pub config: CantorConfig,
    pub generations: Vec<Vec<CantorNode>>,
    pub reports: Vec<GenerationReport>,
    pub notes: Vec<String>,
}

impl CantorTree {
    pub fn c(&self) -> u32 {
        self.config.c()
    }

    pub fn d(&self) -> usize {
        self.config.d()
    }

    pub fn leaves(&self) -> &[CantorNode] {
        self.generations.last().map_or(&[], |g| g.as_slice())
    }

    pub fn node_count(&self) -> usize {
        self.generations.iter().map(Vec::len).sum()
    }
}

const GROWTH_NOTE: &str =
    "growth control uses the audit start depth in place of n_L; growth_ok records n_surrogate ≤ log_c(|L|^-1)·φ(|L|)";

/// Builds the tree, dispatching on ρ and on the degenerate δ = 1 case.
pub fn build(config: &CantorConfig) -> Result<CantorTree> {
    config.validate()?;
    if config.rho < 1.0 {
        return build_rho(config);
    }
    if config.dilations().iter().all(|&x| x == 1.0) {
        return build_identity(config);
    }
    Builder::new(config)?.run()
}

/// Builds the tree for a dilation parameter ρ < 1 with multiplicity splitting.
pub fn build_rho(config: &CantorConfig) -> Result<CantorTree> {
    config.validate()?;
    if config.rho >= 1.0 {
        return build(config);
    }
    Builder::new(config)?.run()
}

/// Counts of grid points k c^{-j} in the open ball B(y, c^{-ρj}) around a grid point,
/// with the analytic floor c^{j(1−ρ)}/2 per axis.
pub fn grid_count_certificate(c: u32, j: u32, rho: f64, d: usize) -> (u128, f64) {
    let per_axis = 2 * points_within(c, j as f64 * (1.0 - rho), 1) - 1;
    let bound = ((c as f64).powf(j as f64 * (1.0 - rho)) / 2.0).powi(d as i32);
    (per_axis.pow(d as u32), bound)
}

/// Number of integers m ≥ 0 with step·m < c^e, i.e. ⌈c^e/step⌉, certified against rounding.
fn points_within(c: u32, e: f64, step: u128) -> u128 {
    let x = (c as f64).powf(e);
    let mut n = (x / step as f64).ceil() as u128;
    let exceeds = |m: u128| -> bool {
        // step·m ≥ c^e, decided exactly when e is an integer.
        let lhs = (step * m) as f64;
        if e.fract() == 0.0 {
            BigUint::from(step * m) >= BigUint::from(c).pow(e as u32)
        } else {
            lhs.ln() >= e * (c as f64).ln()
        }
    };
    while n > 0 && exceeds(n - 1) {
        n -= 1;
    }
    while !exceeds(n) {
        n += 1;
    }
    n
}

struct Builder<'a> {
    cfg: &'a CantorConfig,
    c: u32,
    d: usize,
    mu_lw: Vec<Vec<f64>>,
    m_lw: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<BigRational>>>,
    max_rel_depth: u32,
}

struct ParentState {
    cell: ClosedBox,
    log_mass: f64,
    mass: Option<BigRational>,
}

struct Growth {
    nodes: Vec<CantorNode>,
    candidates: u64,
    capture: f64,
    witness_depth: u32,
    deepening: u32,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a CantorConfig) -> Result<Self> {
        let c = cfg.c();
        let exact = if cfg.exact { Some(exact_weights(&cfg.m)?) } else { None };
        Ok(Self {
            cfg,
            c,
            d: cfg.d(),
            mu_lw: cfg.mu.log_weights(),
            m_lw: cfg.m.log_weights(),
            exact,
            max_rel_depth: (120.0 / (c as f64).log2()).floor() as u32,
        })
    }

    fn audit(&self) -> Audit<'_> {
        let rho_lt1 = self.cfg.rho < 1.0;
        Audit {
            c: self.c,
            mu_lw: &self.mu_lw,
            m_lw: &self.m_lw,
            alpha: self.cfg.alpha,
            beta: self.cfg.beta,
            gauges: &self.cfg.gauges,
            ln_pm: self.cfg.pm_const.ln(),
            ln_dm: self.cfg.dm_const.ln(),
            pm_extra: if rho_lt1 { 2.0 * self.cfg.alpha } else { 0.0 },
        }
    }

    fn parent_info(&self, cell: &ClosedBox) -> Parent {
        let top = pow_c(self.c, cell.g);
        let mass_of = |k: &BigUint, axis: usize| -> f64 {
            digits_of(k, self.c, cell.g).iter().map(|&e| self.mu_lw[axis][e as usize]).sum()
        };
        let mut p = Parent { g: cell.g, mu_prefix: vec![], mu_prev: vec![], mu_next: vec![] };
        for (axis, k) in cell.k.iter().enumerate() {
            p.mu_prefix.push(mass_of(k, axis));
            p.mu_prev.push((!k.is_zero()).then(|| mass_of(&(k - 1u32), axis)));
            let next = k + 1u32;
            p.mu_next.push((next < top).then(|| mass_of(&next, axis)));
        }
        p
    }

    fn run(&self) -> Result<CantorTree> {
        let schedule = self.cfg.dilations();
        let root = ParentState {
            cell: ClosedBox::root(self.d),
            log_mass: 0.0,
            mass: self.exact.as_ref().map(|_| BigRational::one()),
        };
        let mut parents = vec![root];
        let mut generations: Vec<Vec<CantorNode>> = Vec::new();
        let mut reports = Vec::new();
        let mut total = 0usize;
        for (pi, &d_p) in schedule.iter().enumerate() {
            let grown: Vec<Growth> = parents
                .par_iter()
                .map(|parent| if self.cfg.rho < 1.0 { self.grow_rho(parent, d_p) } else { self.grow(parent, d_p) })
                .collect::<Result<_>>()
                .map_err(|e| match e {
                    Error::Construction(msg) => Error::Construction(format!("generation {}: {msg}", pi + 1)),
                    other => other,
                })?;
            let mut nodes = Vec::new();
            let mut report = GenerationReport {
                p: pi + 1,
                d_p,
                nodes: 0,
                witness_depths: (u32::MAX, 0),
                candidates: 0,
                kept: 0,
                min_capture: f64::INFINITY,
                capture_ok: true,
                max_deepening: 0,
            };
            for (idx, g) in grown.into_iter().enumerate() {
                report.candidates += g.candidates;
                report.kept += g.nodes.iter().map(|n| n.enclosing.center.clone()).collect::<std::collections::BTreeSet<_>>().len() as u64;
                report.min_capture = report.min_capture.min(g.capture);
                report.witness_depths.0 = report.witness_depths.0.min(g.witness_depth);
                report.witness_depths.1 = report.witness_depths.1.max(g.witness_depth);
                report.max_deepening = report.max_deepening.max(g.deepening);
                for mut n in g.nodes {
                    n.parent = (pi > 0).then_some(idx);
                    nodes.push(n);
                }
            }
            report.nodes = nodes.len();
            report.capture_ok = report.min_capture >= 1.0 / self.cfg.k_d();
            total += nodes.len();
            if total > self.cfg.node_budget {
                return Err(Error::Resource(format!("tree exceeds {} nodes at generation {}", self.cfg.node_budget, pi + 1)));
            }
            parents = nodes
                .iter()
                .map(|n| ParentState { cell: n.cell.clone(), log_mass: n.log_mass, mass: n.mass.clone() })
                .collect();
            generations.push(nodes);
            reports.push(report);
        }
        Ok(CantorTree { config: self.cfg.clone(), generations, reports, notes: vec![GROWTH_NOTE.to_string()] })
    }

    fn growth_ok(&self, parent: &ClosedBox) -> bool {
        let lc = (self.c as f64).ln();
        let size = (-(parent.g as f64) * lc).exp();
        (self.cfg.audit_start as f64) <= parent.g as f64 * self.cfg.gauges.phi(size)
    }

    /// Absolute rational coordinates of a relative grid point.
    fn absolute(&self, parent: &ClosedBox, u: &[u128], rel_depth: u32) -> Vec<BigRational> {
        let scale = pow_c(self.c, rel_depth);
        let den = pow_c(self.c, parent.g + rel_depth);
        parent.k.iter().zip(u).map(|(k, &ui)| ratio(k * &scale + BigUint::from(ui), den.clone())).collect()
    }

    /// ln m^L and exact m^L of the union of cells [u−lo, u+hi) on every axis, clipped to L.
    fn window_mass(&self, u: &[u128], rel_depth: u32, below: u128, above: u128) -> (f64, Option<BigRational>) {
        let top = (self.c as u128).pow(rel_depth);
        let mut ln = 0.0;
        let mut exact = self.exact.as_ref().map(|_| BigRational::one());
        for (axis, &ui) in u.iter().enumerate() {
            let lo = ui.saturating_sub(below);
            let hi = (ui + above).min(top);
            let terms: Vec<f64> = (lo..hi).map(|v| rel_log_mass(&self.m_lw[axis], v, rel_depth, self.c)).collect();
            ln += log_sum_exp(&terms);
            if let (Some(acc), Some(w)) = (exact.as_mut(), self.exact.as_ref()) {
                let s = (lo..hi).fold(BigRational::zero(), |a, v| a + rel_exact_mass(&w[axis], v, rel_depth, self.c));
                *acc *= s;
            }
        }
        (ln, exact)
    }

    /// Captured fraction of the union of windows around all candidates.
    fn capture(&self, cands: &[Vec<u128>], kept_ln: f64, rel_depth: u32, below: u128, above: u128) -> f64 {
        let top = (self.c as u128).pow(rel_depth);
        let mut cells: Vec<Vec<u128>> = Vec::new();
        let mut set = std::collections::HashSet::new();
        for u in cands {
            let ranges: Vec<(u128, u128)> = u.iter().map(|&x| (x.saturating_sub(below), (x + above).min(top))).collect();
            let mut cur: Vec<u128> = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                if set.insert(cur.clone()) {
                    cells.push(cur.clone());
                }
                for axis in 0..cur.len() {
                    cur[axis] += 1;
                    if cur[axis] < ranges[axis].1 {
                        continue 'outer;
                    }
                    cur[axis] = ranges[axis].0;
                }
                break;
            }
        }
        let terms: Vec<f64> = cells
            .iter()
            .map(|cell| cell.iter().enumerate().map(|(axis, &v)| rel_log_mass(&self.m_lw[axis], v, rel_depth, self.c)).sum())
            .collect();
        (kept_ln - log_sum_exp(&terms)).exp()
    }

    fn iv_check(&self, cell: &ClosedBox, log_mass: f64, exponent_base: f64, d_p: f64) -> (f64, f64, bool) {
        let ln_side = cell.ln_side(self.c);
        let side = ln_side.exp();
        let mut exponent = exponent_base / d_p - 2.0 * self.cfg.gauges.phi(side);
        if self.cfg.rho < 1.0 {
            exponent -= self.cfg.gauges.chi(side, self.cfg.rho);
        }
        let bound = exponent * ln_side;
        (exponent, bound, log_mass <= bound)
    }

    fn grow(&self, parent: &ParentState, d_p: f64) -> Result<Growth> {
        let audit = self.audit();
        let info = self.parent_info(&parent.cell);
        let n0 = self.cfg.audit_start;
        let first = n0 + 4;
        let mut failure = String::new();
        for depth in first..=first + self.cfg.search_cap {
            if depth > self.max_rel_depth {
                return Err(Error::Resource(format!("relative witness depth {depth} exceeds the supported {}", self.max_rel_depth)));
            }
            let j = parent.cell.g + depth;
            let win = Window { depth, dm_from: n0, pm_from: depth - 4 };
            let top = (self.c as u128).pow(depth);
            let cands: Vec<Vec<u128>> = enumerate(&audit, &info, win, self.cfg.candidate_budget)?
                .into_iter()
                .filter(|u| u.iter().all(|&x| x >= 2 && x + 2 <= top))
                .collect();
            if cands.is_empty() {
                failure = format!("no witness inside the box passed (pm)/(dm) at depth {j}");
                continue;
            }
            let masses: Vec<(f64, Option<BigRational>)> = cands.iter().map(|u| self.window_mass(u, depth, 2, 2)).collect();
            let balls: Vec<GridBall> = cands.iter().map(|u| GridBall { center: u.iter().map(|&x| x as i128).collect(), radius: 2 }).collect();
            let peak = masses.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = masses.iter().map(|m| (m.0 - peak).exp()).collect();
            let kept = greedy_disjoint(&balls, &weights);
            let kept_ln = log_sum_exp(&kept.iter().map(|&i| masses[i].0).collect::<Vec<_>>());
            let kept_exact = self.exact.as_ref().map(|_| kept.iter().fold(BigRational::zero(), |a, &i| a + masses[i].1.clone().unwrap()));
            let lambda = ratio(BigUint::from(2u32), pow_c(self.c, j));
            let mut nodes = Vec::with_capacity(kept.len());
            let mut worst = f64::NEG_INFINITY;
            for &i in &kept {
                let x = self.absolute(&parent.cell, &cands[i], depth);
                let r = Radius::power(&lambda, d_p);
                let cell = maximal_box_in_ball(&x, &r, &parent.cell, self.c)
                    .ok_or_else(|| Error::Construction(format!("no c-adic box fits inside B(x, λ^{d_p}) at depth {j}")))?;
                let mass = match (&parent.mass, &masses[i].1, &kept_exact) {
                    (Some(pm), Some(mi), Some(tot)) => Some(pm * mi / tot),
                    _ => None,
                };
                let log_mass = match &mass {
                    Some(m) => ln_rational(m),
                    None => parent.log_mass + masses[i].0 - kept_ln,
                };
                let (iv_exponent, iv_log_bound, iv_pass) = self.iv_check(&cell, log_mass, self.cfg.beta, d_p);
                worst = worst.max(log_mass - iv_log_bound);
                let contained = box_in_ball(&cell, &x, &r, self.c) && parent.cell.contains_box(&cell, self.c) && r.ln <= ln_rational(&lambda);
                nodes.push(CantorNode {
                    parent: None,
                    cell,
                    d_p,
                    witness: Witness { depth: j, center: x.clone(), lambda: lambda.clone() },
                    enclosing: EnclosingBall { center: x, radius: lambda.clone(), multiplicity: 1 },
                    log_mass,
                    mass,
                    audit: NodeAudit {
                        pm_depths: Some((j - 4, j)),
                        dm_depths: Some((n0, depth)),
                        n_surrogate: n0,
                        growth_ok: self.growth_ok(&parent.cell),
                        iv_exponent,
                        iv_log_bound,
                        iv_pass,
                        contained,
                    },
                });
            }
            if worst <= 0.0 {
                let capture = self.capture(&cands, kept_ln, depth, 2, 2);
                return Ok(Growth { nodes, candidates: cands.len() as u64, capture, witness_depth: j, deepening: depth - first });
            }
            failure = format!(
                "property (iv) fails at witness depth {j}: worst excess {worst:.4} nats over |I|^(β/d_p − 2φ(|I|)); the constant 8Q(d)C/‖m‖ is not yet absorbed by |I|^-φ(|I|)"
            );
        }
        Err(Error::Construction(format!(
            "box at depth {} exhausted the search cap of {} extra depths: {failure}",
            parent.cell.g, self.cfg.search_cap
        )))
    }

    fn grow_rho(&self, parent: &ParentState, d_p: f64) -> Result<Growth> {
        let audit = self.audit();
        let info = self.parent_info(&parent.cell);
        let rho = self.cfg.rho;
        let n0 = self.cfg.audit_start;
        let g = parent.cell.g;
        let lc = (self.c as f64).ln();
        // Smallest witness depth whose coarse depth ⌊ρn⌋ clears the audit margin.
        let mut n_first = g + n0 + 4;
        while ((rho * n_first as f64).floor() as u32) < g + n0 + 4 {
            n_first += 1;
        }
        let mut failure = String::new();
        for n in n_first..=n_first + self.cfg.search_cap {
            let s = (rho * n as f64).floor() as u32;
            let depth = s - g;
            if n - g > self.max_rel_depth {
                return Err(Error::Resource(format!("relative witness depth {} exceeds the supported {}", n - g, self.max_rel_depth)));
            }
            let win = Window { depth, dm_from: n0, pm_from: u32::MAX };
            let top = (self.c as u128).pow(depth);
            let cands: Vec<Vec<u128>> = enumerate(&audit, &info, win, self.cfg.candidate_budget)?
                .into_iter()
                .filter(|u| u.iter().all(|&x| x >= 3 && x + 3 <= top))
                .collect();
            if cands.is_empty() {
                failure = format!("no coarse centre passed (dm) at depth {s}");
                continue;
            }
            let masses: Vec<(f64, Option<BigRational>)> = cands.iter().map(|u| self.window_mass(u, depth, 3, 3)).collect();
            let balls: Vec<GridBall> = cands.iter().map(|u| GridBall { center: u.iter().map(|&x| x as i128).collect(), radius: 3 }).collect();
            let peak = masses.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = masses.iter().map(|m| (m.0 - peak).exp()).collect();
            let kept = greedy_disjoint(&balls, &weights);

            // Offsets 4m c^{-n}, 4|m| < c^{n(1−ρ)}, keep the witnesses B(x, 2c^{-n}) disjoint.
            let half = points_within(self.c, n as f64 * (1.0 - rho), 4) as i128 - 1;
            let chi = self.cfg.gauges.chi((-(n as f64) * lc).exp(), rho);
            let full = (2 * half + 1) as f64;
            let target = if chi > 0.0 {
                let want = (n as f64 * (1.0 - rho - chi / self.d as f64) * lc).exp().ceil().max(1.0);
                (want as usize).min(full as usize)
            } else {
                full as usize
            };
            let offsets: Vec<i128> = (0..target).map(|t| -half + ((t as f64 * full / target as f64).floor() as i128)).collect();
            let lambda = ratio(BigUint::from(2u32), pow_c(self.c, n));
            let coarse_radius = ratio(BigUint::from(3u32), pow_c(self.c, s));
            let unit = BigRational::new(BigInt::from(4), BigInt::from(pow_c(self.c, n)));
            let pm_lo_hi: Vec<(f64, f64)> = (n - 4..=n).map(|i| audit.pm_bounds(i)).collect();
            let mut survivors = Vec::new();
            for &i in &kept {
                let y = self.absolute(&parent.cell, &cands[i], depth);
                let mut xs: Vec<Vec<BigRational>> = vec![vec![]];
                for ya in &y {
                    let mut next = Vec::with_capacity(xs.len() * offsets.len());
                    for base in &xs {
                        for &o in &offsets {
                            let mut v = base.clone();
                            v.push(ya + &unit * BigRational::from_integer(BigInt::from(o)));
                            next.push(v);
                        }
                    }
                    xs = next;
                }
                let xs: Vec<Vec<BigRational>> = xs.into_iter().filter(|x| self.pm_at(x, n, &pm_lo_hi)).collect();
                if !xs.is_empty() {
                    survivors.push((i, y, xs));
                }
            }
            // Mass is shared among the coarse balls that keep at least one witness.
            let kept_ln = log_sum_exp(&survivors.iter().map(|s| masses[s.0].0).collect::<Vec<_>>());
            let kept_exact =
                self.exact.as_ref().map(|_| survivors.iter().fold(BigRational::zero(), |a, s| a + masses[s.0].1.clone().unwrap()));
            let mut nodes = Vec::new();
            let mut worst = f64::NEG_INFINITY;
            for (i, y, xs) in survivors {
                let share = xs.len() as u64;
                for x in xs {
                    let r = Radius::power(&lambda, d_p);
                    let cell = maximal_box_in_ball(&x, &r, &parent.cell, self.c)
                        .ok_or_else(|| Error::Construction(format!("no c-adic box fits inside B(x, λ^{d_p}) at depth {n}")))?;
                    let mass = match (&parent.mass, &masses[i].1, &kept_exact) {
                        (Some(pm), Some(mi), Some(tot)) => Some(pm * mi / (tot * BigRational::from_integer(BigInt::from(share)))),
                        _ => None,
                    };
                    let log_mass = match &mass {
                        Some(m) => ln_rational(m),
                        None => parent.log_mass + masses[i].0 - kept_ln - (share as f64).ln(),
                    };
                    let base = self.d as f64 * (1.0 - rho) + rho * self.cfg.beta;
                    let (iv_exponent, iv_log_bound, iv_pass) = self.iv_check(&cell, log_mass, base, d_p);
                    worst = worst.max(log_mass - iv_log_bound);
                    let dist_ok = x.iter().zip(&y).all(|(a, b)| {
                        let gap = if a > b { a - b } else { b - a };
                        r.surely_at_most(&(&coarse_radius - gap))
                    });
                    let contained = box_in_ball(&cell, &x, &r, self.c) && parent.cell.contains_box(&cell, self.c) && dist_ok;
                    nodes.push(CantorNode {
                        parent: None,
                        cell,
                        d_p,
                        witness: Witness { depth: n, center: x, lambda: lambda.clone() },
                        enclosing: EnclosingBall { center: y.clone(), radius: coarse_radius.clone(), multiplicity: share },
                        log_mass,
                        mass,
                        audit: NodeAudit {
                            pm_depths: Some((n - 4, n)),
                            dm_depths: Some((n0, depth)),
                            n_surrogate: n0,
                            growth_ok: self.growth_ok(&parent.cell),
                            iv_exponent,
                            iv_log_bound,
                            iv_pass,
                            contained,
                        },
                    });
                }
            }
            if nodes.is_empty() {
                failure = format!("no witness at depth {n} passed the (pm) audit");
                continue;
            }
            if worst <= 0.0 {
                let capture = self.capture(&cands, kept_ln, depth, 3, 3);
                return Ok(Growth { nodes, candidates: cands.len() as u64, capture, witness_depth: n, deepening: n - n_first });
            }
            failure = format!(
                "property (iv) fails at witness depth {n}: worst excess {worst:.4} nats over |I|^((d(1−ρ)+ρβ)/d_p − 2φ − χ)"
            );
        }
        Err(Error::Construction(format!(
            "box at depth {g} exhausted the search cap of {} extra depths: {failure}",
            self.cfg.search_cap
        )))
    }

    /// (pm) on the 3^d neighbourhood of the depth-i box of x, for i in n−4..=n.
    fn pm_at(&self, x: &[BigRational], n: u32, bounds: &[(f64, f64)]) -> bool {
        for (t, i) in (n - 4..=n).enumerate() {
            let den = pow_c(self.c, i);
            let top = den.clone();
            let mut per_axis: Vec<Vec<f64>> = Vec::with_capacity(self.d);
            for (axis, xi) in x.iter().enumerate() {
                let k = (xi * BigRational::from_integer(BigInt::from(den.clone()))).floor().to_integer();
                let k = k.to_biguint().unwrap_or_default();
                let mut opts = Vec::with_capacity(3);
                for cand in [k.checked_sub_one(), Some(k.clone()), Some(&k + 1u32)].into_iter().flatten() {
                    if cand < top {
                        opts.push(digits_of(&cand, self.c, i).iter().map(|&e| self.mu_lw[axis][e as usize]).sum());
                    }
                }
                per_axis.push(opts);
            }
            let (lo, hi) = bounds[t];
            let mut sums = vec![0.0];
            for opts in &per_axis {
                sums = sums.iter().flat_map(|s| opts.iter().map(move |o| s + o)).collect();
            }
            if sums.iter().any(|&v| v < lo || v > hi) {
                return false;
            }
        }
        true
    }
}

trait CheckedSubOne: Sized {
    fn checked_sub_one(&self) -> Option<Self>;
}

impl CheckedSubOne for BigUint {
    fn checked_sub_one(&self) -> Option<Self> {
        (!self.is_zero()).then(|| self - 1u32)
    }
}

/// δ = 1, ρ = 1: generation p is the full depth-p grid carrying m itself.
fn build_identity(cfg: &CantorConfig) -> Result<CantorTree> {
    let c = cfg.c();
    let d = cfg.d();
    let exact = if cfg.exact { Some(exact_weights(&cfg.m)?) } else { None };
    let lw = cfg.m.log_weights();
    let per_gen = (c as f64).powi(d as i32);
    let total: f64 = (1..=cfg.generations).map(|p| per_gen.powi(p as i32)).sum();
    if total > cfg.node_budget as f64 {
        return Err(Error::Resource(format!("the full grid needs {total:.0} nodes, budget {}", cfg.node_budget)));
    }
    let gauges = cfg.gauges;
    let mut generations: Vec<Vec<CantorNode>> = Vec::new();
    let mut reports = Vec::new();
    let mut prev: Vec<(ClosedBox, f64, Option<BigRational>)> = vec![(ClosedBox::root(d), 0.0, exact.as_ref().map(|_| BigRational::one()))];
    for p in 1..=cfg.generations as u32 {
        let mut nodes = Vec::new();
        for (pi, (cell, lm, em)) in prev.iter().enumerate() {
            for t in 0..per_gen as usize {
                let mut rest = t;
                let mut k = Vec::with_capacity(d);
                let mut log_mass = *lm;
                let mut mass = em.clone();
                for axis in 0..d {
                    let e = rest % c as usize;
                    rest /= c as usize;
                    k.push(&cell.k[axis] * c + e);
                    log_mass += lw[axis][e];
                    if let (Some(m), Some(w)) = (mass.as_mut(), exact.as_ref()) {
                        *m *= &w[axis][e];
                    }
                }
                if let Some(m) = &mass {
                    log_mass = ln_rational(m);
                }
                let child = ClosedBox { g: p, k };
                let side = child.side(c);
                let half = &side / BigRational::from_integer(BigInt::from(2));
                let center: Vec<BigRational> = child.corner(c).iter().map(|a| a + &half).collect();
                let ln_side = child.ln_side(c);
                let exponent = cfg.beta - 2.0 * gauges.phi(ln_side.exp());
                let bound = exponent * ln_side;
                nodes.push(CantorNode {
                    parent: (p > 1).then_some(pi),
                    cell: child,
                    d_p: 1.0,
                    witness: Witness { depth: p, center: center.clone(), lambda: side.clone() },
                    enclosing: EnclosingBall { center, radius: side, multiplicity: 1 },
                    log_mass,
                    mass,
                    audit: NodeAudit {
                        pm_depths: None,
                        dm_depths: None,
                        n_surrogate: 0,
                        growth_ok: true,
                        iv_exponent: exponent,
                        iv_log_bound: bound,
                        iv_pass: log_mass <= bound,
                        contained: true,
                    },
                });
            }
        }
        prev = nodes.iter().map(|n| (n.cell.clone(), n.log_mass, n.mass.clone())).collect();
        reports.push(GenerationReport {
            p: p as usize,
            d_p: 1.0,
            nodes: nodes.len(),
            witness_depths: (p, p),
            candidates: nodes.len() as u64,
            kept: nodes.len() as u64,
            min_capture: 1.0,
            capture_ok: true,
            max_deepening: 0,
        });
        generations.push(nodes);
    }
    Ok(CantorTree {
        config: cfg.clone(),
        generations,
        reports,
        notes: vec!["δ = 1 and ρ = 1: m_1 = m on the full c-adic grid; property (iv) is recorded, not enforced".to_string()],
    })
}
