use super::SpectrumTable;

/// Slope bounds of the grid: α must lie in [s_right − η, s_left + η] for a finite τ*.
fn slope_range(q: &[f64], tau: &[f64]) -> (f64, f64, f64) {
    let n = q.len();
    let chord = |i: usize| (tau[i + 1] - tau[i]) / (q[i + 1] - q[i]);
    let s_left = chord(0);
    let s_right = chord(n - 2);
    let curv = if n >= 3 {
        (chord(0) - chord(1)).abs().max((chord(n - 3) - chord(n - 2)).abs())
    } else {
        0.0
    };
    let eta = curv.max(1e-12 * (1.0 + s_left.abs().max(s_right.abs())));
    (s_right, s_left, eta)
}

/// τ*(α) = min over the grid of αq − τ(q), or −∞ outside the attained slope range.
pub fn legendre_point(q: &[f64], tau: &[f64], alpha: f64) -> f64 {
    if q.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let (lo, hi, eta) = slope_range(q, tau);
    if alpha < lo - eta || alpha > hi + eta {
        return f64::NEG_INFINITY;
    }
    q.iter().zip(tau).map(|(q, t)| alpha * q - t).fold(f64::INFINITY, f64::min)
}

/// Evenly spaced α values spanning the chord-slope range of a fitted table.
pub fn default_alpha_grid(table: &SpectrumTable, n: usize) -> Vec<f64> {
    let (lo, hi, _) = slope_range(&table.q_grid, &table.tau);
    if n < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Fills the Legendre part of `table`.
pub fn legendre(table: &mut SpectrumTable, alpha_grid: &[f64]) {
    table.alpha_grid = alpha_grid.to_vec();
    table.tau_star = alpha_grid.iter().map(|&a| legendre_point(&table.q_grid, &table.tau, a)).collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::q_grid;

    #[test]
    fn linear_tau_has_point_spectrum() {
        let q = q_grid(-3.0, 3.0, 0.5);
        let tau: Vec<f64> = q.iter().map(|q| q - 1.0).collect();
        assert!((legendre_point(&q, &tau, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(legendre_point(&q, &tau, 1.01), f64::NEG_INFINITY);
        assert_eq!(legendre_point(&q, &tau, 0.99), f64::NEG_INFINITY);
    }

    #[test]
    fn multinomial_entropy_point_and_endpoint() {
        let tau_of = |q: f64| -(0.8f64.powf(q) + 0.2f64.powf(q)).log2();
        let h = -(0.8 * 0.8f64.log2() + 0.2 * 0.2f64.log2());
        let q = q_grid(-5.0, 5.0, 0.1);
        let tau: Vec<f64> = q.iter().map(|&q| tau_of(q)).collect();
        assert!((legendre_point(&q, &tau, h) - h).abs() < 1e-12);
        let wide = q_grid(-30.0, 30.0, 0.1);
        let tau_w: Vec<f64> = wide.iter().map(|&q| tau_of(q)).collect();
        let end = legendre_point(&wide, &tau_w, -0.8f64.log2());
        assert!(end.is_finite() && end.abs() < 1e-9, "{end}");
    }
}
