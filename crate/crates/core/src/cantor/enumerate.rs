//! Depth-first enumeration of witness grid points inside a parent box, pruned by
//! the (pm) and (dm) audits on the 3^d neighbourhood of every visited box.

use crate::error::{Error, Result};
use crate::spectrum::GaugeParams;

/// Audit thresholds shared by all parents of a generation.
pub(crate) struct Audit<'a> {
    pub c: u32,
    pub mu_lw: &'a [Vec<f64>],
    pub m_lw: &'a [Vec<f64>],
    pub alpha: f64,
    pub beta: f64,
    pub gauges: &'a GaugeParams,
    pub ln_pm: f64,
    pub ln_dm: f64,
    /// Extra exponent on the (pm) gauge, 2αχ for ρ < 1.
    pub pm_extra: f64,
}

/// Parent box data: depth and μ log-masses of its prefix and its two axis neighbours.
pub(crate) struct Parent {
    pub g: u32,
    pub mu_prefix: Vec<f64>,
    pub mu_prev: Vec<Option<f64>>,
    pub mu_next: Vec<Option<f64>>,
}

/// Relative depths at which each audit is active.
#[derive(Clone, Copy)]
pub(crate) struct Window {
    pub depth: u32,
    pub dm_from: u32,
    pub pm_from: u32,
}

#[derive(Clone, Copy, Default)]
struct AxisState {
    u: u128,
    mu: f64,
    m: f64,
    run_max: u32,
    run_zero: u32,
}

/// μ log-mass (absolute, None when the box does not exist) and m^L log-mass (None outside L).
type Option2 = (Option<f64>, Option<f64>);

impl Audit<'_> {
    fn neighbours(&self, p: &Parent, axis: usize, r: u32, st: &AxisState, digits: &[u32]) -> [Option2; 3] {
        let c = self.c as usize;
        let (mw, lw) = (&self.mu_lw[axis], &self.m_lw[axis]);
        let own = (Some(p.mu_prefix[axis] + st.mu), Some(st.m));
        let plus = if st.run_max == r {
            (p.mu_next[axis].map(|v| v + r as f64 * mw[0]), None)
        } else {
            let t = st.run_max as f64;
            let e = digits[(r - st.run_max - 1) as usize] as usize;
            let dmu = t * (mw[0] - mw[c - 1]) + mw[e + 1] - mw[e];
            let dm = t * (lw[0] - lw[c - 1]) + lw[e + 1] - lw[e];
            (Some(p.mu_prefix[axis] + st.mu + dmu), Some(st.m + dm))
        };
        let minus = if st.run_zero == r {
            (p.mu_prev[axis].map(|v| v + r as f64 * mw[c - 1]), None)
        } else {
            let t = st.run_zero as f64;
            let e = digits[(r - st.run_zero - 1) as usize] as usize;
            let dmu = t * (mw[c - 1] - mw[0]) + mw[e - 1] - mw[e];
            let dm = t * (lw[c - 1] - lw[0]) + lw[e - 1] - lw[e];
            (Some(p.mu_prefix[axis] + st.mu + dmu), Some(st.m + dm))
        };
        [minus, own, plus]
    }

    /// (pm) bracket on ln μ of a box at absolute depth i.
    pub fn pm_bounds(&self, i: u32) -> (f64, f64) {
        let lc = (self.c as f64).ln();
        let ln_size = -(i as f64) * lc;
        let r = (self.c as f64).powi(-(i as i32));
        let slack = self.gauges.psi(r) + self.pm_extra * self.gauges.chi(r, 0.0);
        (-self.ln_pm + (self.alpha + slack) * ln_size, self.ln_pm + (self.alpha - slack) * ln_size)
    }

    /// (dm) cap on ln m^L of a box at relative depth r.
    pub fn dm_bound(&self, r: u32) -> f64 {
        let lc = (self.c as f64).ln();
        let size = (self.c as f64).powi(-(r as i32));
        self.ln_dm + (self.beta - self.gauges.phi(size)) * (-(r as f64) * lc)
    }

    fn passes(&self, r: u32, win: Window, opts: &[[Option2; 3]], bounds: &Bounds) -> bool {
        let check_pm = r >= win.pm_from;
        let check_dm = r >= win.dm_from;
        if !check_pm && !check_dm {
            return true;
        }
        let (pm_lo, pm_hi) = bounds.pm[r as usize];
        let dm_hi = bounds.dm[r as usize];
        let d = opts.len();
        let combos = 3usize.pow(d as u32);
        for code in 0..combos {
            let mut rest = code;
            let mut mu = Some(0.0);
            let mut m = Some(0.0);
            for axis_opts in opts {
                let (a, b) = axis_opts[rest % 3];
                rest /= 3;
                mu = mu.and_then(|s| a.map(|v| s + v));
                m = m.and_then(|s| b.map(|v| s + v));
            }
            if check_pm {
                if let Some(v) = mu {
                    if v < pm_lo || v > pm_hi {
                        return false;
                    }
                }
            }
            if check_dm {
                if let Some(v) = m {
                    if v > dm_hi {
                        return false;
                    }
                }
            }
        }
        true
    }
}

struct Bounds {
    pm: Vec<(f64, f64)>,
    dm: Vec<f64>,
}

/// Relative coordinates (units c^{-depth} inside the parent) of every audited witness.
pub(crate) fn enumerate(audit: &Audit, parent: &Parent, win: Window, budget: usize) -> Result<Vec<Vec<u128>>> {
    let d = parent.mu_prefix.len();
    let bounds = Bounds {
        pm: (0..=win.depth).map(|r| audit.pm_bounds(parent.g + r)).collect(),
        dm: (0..=win.depth).map(|r| audit.dm_bound(r)).collect(),
    };
    let mut digits = vec![vec![0u32; win.depth as usize]; d];
    let mut states = vec![vec![AxisState::default(); d]; win.depth as usize + 1];
    let mut out = Vec::new();
    let mut opts = vec![[(None, None); 3]; d];
    // Iterative DFS over digit tuples: code[r] is the next tuple to try at depth r+1.
    let c = audit.c as usize;
    let tuples = c.pow(d as u32);
    let mut code = vec![0usize; win.depth as usize + 1];
    let mut r = 0usize;
    if win.depth == 0 {
        return Ok(vec![vec![0; d]]);
    }
    loop {
        if code[r] == tuples {
            if r == 0 {
                break;
            }
            code[r] = 0;
            r -= 1;
            continue;
        }
        let t = code[r];
        code[r] += 1;
        let mut rest = t;
        for axis in 0..d {
            let e = (rest % c) as u32;
            rest /= c;
            let prev = states[r][axis];
            digits[axis][r] = e;
            let (mw, lw) = (&audit.mu_lw[axis], &audit.m_lw[axis]);
            states[r + 1][axis] = AxisState {
                u: prev.u * audit.c as u128 + e as u128,
                mu: prev.mu + mw[e as usize],
                m: prev.m + lw[e as usize],
                run_max: if e as usize == c - 1 { prev.run_max + 1 } else { 0 },
                run_zero: if e == 0 { prev.run_zero + 1 } else { 0 },
            };
        }
        let depth = r as u32 + 1;
        if depth >= win.pm_from.min(win.dm_from) {
            for axis in 0..d {
                opts[axis] = audit.neighbours(parent, axis, depth, &states[r + 1][axis], &digits[axis][..depth as usize]);
            }
            if !audit.passes(depth, win, &opts, &bounds) {
                continue;
            }
        }
        if depth == win.depth {
            out.push(states[r + 1].iter().map(|s| s.u).collect());
            if out.len() > budget {
                return Err(Error::Resource(format!("more than {budget} witness candidates at relative depth {}", win.depth)));
            }
        } else {
            r += 1;
        }
    }
    Ok(out)
}

/// Sum of log-weights over the `depth` base-c digits of u.
pub(crate) fn rel_log_mass(lw: &[f64], u: u128, depth: u32, c: u32) -> f64 {
    let mut v = u;
    let mut s = 0.0;
    for _ in 0..depth {
        s += lw[(v % c as u128) as usize];
        v /= c as u128;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lw(p: &[f64]) -> Vec<Vec<f64>> {
        vec![p.iter().map(|x| x.ln()).collect()]
    }

    #[test]
    fn unpruned_enumeration_is_complete() {
        let g = GaugeParams::default();
        let w = lw(&[0.5, 0.5]);
        let a = Audit { c: 2, mu_lw: &w, m_lw: &w, alpha: 1.0, beta: 1.0, gauges: &g, ln_pm: 2.0, ln_dm: 0.0, pm_extra: 0.0 };
        let p = Parent { g: 0, mu_prefix: vec![0.0], mu_prev: vec![None], mu_next: vec![None] };
        let out = enumerate(&a, &p, Window { depth: 6, dm_from: 1, pm_from: 2 }, 1000).unwrap();
        assert_eq!(out.len(), 64);
        assert!(out.windows(2).all(|w| w[0][0] + 1 == w[1][0]));
    }

    #[test]
    fn incremental_neighbours_match_direct() {
        // With a strict (pm) bracket only boxes whose whole neighbourhood is typical survive.
        let g = GaugeParams::default();
        let w = lw(&[0.8, 0.2]);
        let a = Audit { c: 2, mu_lw: &w, m_lw: &w, alpha: 0.72, beta: 0.72, gauges: &g, ln_pm: 1.0, ln_dm: 10.0, pm_extra: 0.0 };
        let p = Parent { g: 0, mu_prefix: vec![0.0], mu_prev: vec![None], mu_next: vec![None] };
        let depth = 10;
        let out = enumerate(&a, &p, Window { depth, dm_from: 99, pm_from: depth }, 1 << 20).unwrap();
        let (lo, hi) = a.pm_bounds(depth);
        let direct: Vec<u128> = (0..1u128 << depth)
            .filter(|&u| {
                [u.checked_sub(1), Some(u), (u + 1 < 1 << depth).then_some(u + 1)]
                    .into_iter()
                    .flatten()
                    .all(|v| (lo..=hi).contains(&rel_log_mass(&w[0], v, depth, 2)))
            })
            .collect();
        let got: Vec<u128> = out.iter().map(|v| v[0]).collect();
        assert_eq!(got, direct);
        assert!(!got.is_empty() && got.len() < 1 << depth);
    }
}
