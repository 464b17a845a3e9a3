//! Log-space sums, least-squares lines and a rank-trend test.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// ln Σ exp(x_i), exact for empty input (−∞) and infinite entries.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// ln(exp(a) + exp(b)).
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Streaming log-sum-exp accumulator, mergeable across threads.
#[derive(Clone, Copy, Debug)]
pub struct LogAcc {
    max: f64,
    sum: f64,
}

impl Default for LogAcc {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogAcc {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.sum += (x - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(mut self, other: LogAcc) -> LogAcc {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
            self
        } else {
            LogAcc { max: other.max, sum: other.sum + self.sum * (self.max - other.max).exp() }
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Ordinary least-squares line y = slope·x + intercept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

/// Fits a line; returns `None` with fewer than two distinct abscissae.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept: my - slope * mx, r2, n })
}

/// Kendall rank correlation of a sequence against its index with the
/// one-sided normal-approximation p-value for an increasing trend.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TrendTest {
    pub tau: f64,
    pub z: f64,
    pub p_increasing: f64,
}

pub fn kendall_trend(ys: &[f64]) -> TrendTest {
    let n = ys.len();
    if n < 3 {
        return TrendTest { tau: 0.0, z: 0.0, p_increasing: 1.0 };
    }
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match ys[j].partial_cmp(&ys[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let pairs = nf * (nf - 1.0) / 2.0;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    TrendTest { tau: s as f64 / pairs, z, p_increasing: 1.0 - normal.cdf(z) }
}

/// Natural logarithm of a big integer via its leading 64 bits.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        let v = x.to_u64_digits().first().copied().unwrap_or(0);
        return (v as f64).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64_digits()[0];
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!((actual - expected).abs() <= tol, "{actual} vs {expected}");
    }

    #[test]
    fn lse_matches_naive_in_safe_range() {
        let xs = [0.1, -2.0, 3.5, 0.0];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert_close(log_sum_exp(&xs), naive, 1e-14);
    }

    #[test]
    fn lse_survives_extreme_magnitudes() {
        assert_close(log_sum_exp(&[-1000.0, -1000.0]), -1000.0 + 2f64.ln(), 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 1.0]), 1.0);
    }

    #[test]
    fn accumulator_agrees_with_batch() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 50.0).collect();
        let mut a = LogAcc::default();
        let mut b = LogAcc::default();
        for (i, &x) in xs.iter().enumerate() {
            if i % 2 == 0 { a.push(x) } else { b.push(x) }
        }
        assert_close(a.merge(b).value(), log_sum_exp(&xs), 1e-12);
        assert_close(log_add_exp(1.0, 2.0), log_sum_exp(&[1.0, 2.0]), 1e-15);
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.25 * x - 3.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert_close(f.slope, 0.25, 1e-14);
        assert_close(f.intercept, -3.0, 1e-13);
        assert_close(f.r2, 1.0, 1e-12);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 2.0]).is_none());
    }

    #[test]
    fn kendall_detects_monotone_growth() {
        let up: Vec<f64> = (0..12).map(f64::from).collect();
        assert!(kendall_trend(&up).p_increasing < 0.01);
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(kendall_trend(&down).p_increasing > 0.99);
        assert_close(kendall_trend(&up).tau, 1.0, 1e-15);
    }
}
