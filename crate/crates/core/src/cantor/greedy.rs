use std::collections::BTreeMap;

/// A ball that can be tested for disjointness and projected on the first axis.
pub trait Ball {
    /// Closed hull of the ball's projection on axis 0.
    fn extent0(&self) -> (f64, f64);
    fn disjoint(&self, other: &Self) -> bool;
}

/// Closed interval [lo, hi].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalBall {
    pub lo: f64,
    pub hi: f64,
}

impl Ball for IntervalBall {
    fn extent0(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn disjoint(&self, other: &Self) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }
}

/// Open sup-norm ball.
#[derive(Clone, Debug, PartialEq)]
pub struct SupBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball for SupBall {
    fn extent0(&self) -> (f64, f64) {
        (self.center[0] - self.radius, self.center[0] + self.radius)
    }

    fn disjoint(&self, other: &Self) -> bool {
        let r = self.radius + other.radius;
        self.center.iter().zip(&other.center).any(|(a, b)| (a - b).abs() >= r)
    }
}

/// Open sup-norm ball on an integer lattice, in grid units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridBall {
    pub center: Vec<i128>,
    pub radius: i128,
}

impl Ball for GridBall {
    fn extent0(&self) -> (f64, f64) {
        ((self.center[0] - self.radius) as f64, (self.center[0] + self.radius) as f64)
    }

    fn disjoint(&self, other: &Self) -> bool {
        let r = self.radius + other.radius;
        self.center.iter().zip(&other.center).any(|(a, b)| (a - b).abs() >= r)
    }
}

fn order_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 { !bits } else { bits | (1 << 63) }
}

/// Max-mass-first disjoint subfamily; ties keep input order. Returns ascending indices.
pub fn greedy_disjoint<B: Ball>(balls: &[B], masses: &[f64]) -> Vec<usize> {
    assert_eq!(balls.len(), masses.len(), "one mass per ball");
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    let mut kept_by_lo: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut max_width = 0.0f64;
    let mut kept = Vec::new();
    for i in order {
        let (lo, hi) = balls[i].extent0();
        let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        let from = order_key(lo - max_width - pad);
        let to = order_key(hi + pad);
        let clash = kept_by_lo
            .range(from..=to)
            .flat_map(|(_, v)| v.iter())
            .any(|&k| !balls[k].disjoint(&balls[i]));
        if !clash {
            kept_by_lo.entry(order_key(lo)).or_default().push(i);
            max_width = max_width.max(hi - lo);
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}
