use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{BoxMeasure, MeasureSpec};
use crate::cgrid::GridGeometry;
use crate::error::{domain, Error, Result};
use crate::numerics::LogAcc;
use crate::rng::DrawStream;

fn default_base() -> u32 {
    2
}

fn default_budget() -> f64 {
    1e7
}

/// Compound Poisson cascade on [0,1] with height cutoff ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpcSpec {
    pub xi: f64,
    pub eps: f64,
    pub seed: u64,
    #[serde(default = "default_base")]
    pub c: u32,
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default = "default_budget")]
    pub point_budget: f64,
}

impl CpcSpec {
    pub fn new(xi: f64, eps: f64, seed: u64) -> Self {
        Self { xi, eps, seed, c: 2, renormalize: false, point_budget: default_budget() }
    }

    /// Expected number of points with s ∈ [0,1].
    pub fn expected_points_unit(&self) -> f64 {
        self.xi / 2.0 * (1.0 / self.eps - 1.0)
    }

    /// Scaling function q − 1 + ξ(q(e−1) − e^q + 1).
    pub fn theta(&self, q: f64) -> f64 {
        q - 1.0 + self.xi * (q * (std::f64::consts::E - 1.0) - q.exp() + 1.0)
    }

    /// The sampled intervals (s − λ, s + λ) for s ∈ [−1,2].
    pub fn sample_intervals(&self) -> Result<Vec<(f64, f64)>> {
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return domain("ξ must be non-negative");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return domain("ε must lie in (0,1)");
        }
        let mean = 3.0 * self.expected_points_unit();
        if mean > self.point_budget {
            return Err(Error::Resource(format!(
                "expected {mean:.3e} points exceed the budget {:.3e}",
                self.point_budget
            )));
        }
        if mean == 0.0 {
            return Ok(Vec::new());
        }
        let mut count_stream = DrawStream::new(self.seed, 0, 0);
        let count = Poisson::new(mean)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(count_stream.rng()) as u64;
        let inv_eps = 1.0 / self.eps;
        let mut stream = DrawStream::new(self.seed, 1, 0);
        Ok((0..count)
            .map(|_| {
                let (u, v) = stream.uniform_pair();
                let s = -1.0 + 3.0 * u;
                let lambda = 1.0 / (1.0 + v * (inv_eps - 1.0));
                (s - lambda, s + lambda)
            })
            .collect())
    }
}

/// Box masses are exact integrals of ε^{ξ(e−1)} e^{N_ε(t)}.
pub fn build_cpc(spec: &CpcSpec, j_max: u32) -> Result<BoxMeasure> {
    let geom = GridGeometry::new(spec.c, 1)?;
    geom.check_depth(j_max)?;
    let intervals = spec.sample_intervals()?;
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * intervals.len());
    let mut base = 0i32;
    for &(a, b) in &intervals {
        if b <= 0.0 || a >= 1.0 {
            continue;
        }
        if a <= 0.0 {
            base += 1;
        } else {
            events.push((a, 1));
        }
        if b < 1.0 {
            events.push((b, -1));
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let log_floor = spec.xi * (std::f64::consts::E - 1.0) * spec.eps.ln();
    let n = geom.box_count(j_max) as usize;
    let h = geom.diameter(j_max);
    let mut finest = Vec::with_capacity(n);
    let mut level = base;
    let mut ev = 0usize;
    for k in 0..n {
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        let mut acc = LogAcc::default();
        let mut cursor = lo;
        while ev < events.len() && events[ev].0 < hi {
            let at = events[ev].0.max(lo);
            if at > cursor {
                acc.push((at - cursor).ln() + level as f64);
                cursor = at;
            }
            level += events[ev].1;
            ev += 1;
        }
        if hi > cursor {
            acc.push((hi - cursor).ln() + level as f64);
        }
        finest.push(acc.value() + log_floor);
    }
    let mu = BoxMeasure::from_finest(geom, j_max, finest, Some(MeasureSpec::Cpc(spec.clone())), Some(spec.seed))?;
    Ok(if spec.renormalize { mu.normalized() } else { mu })
}
