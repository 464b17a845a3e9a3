use serde::{Deserialize, Serialize};

use super::GaugeParams;
use crate::error::{Error, Result};

/// D(β,ρ,δ) with the critical rate δ* where the plateau ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimFormula {
    pub value: f64,
    pub delta_star: f64,
    pub saturated: bool,
}

/// D(β,ρ,δ) = min((d(1−ρ)+ρβ)/δ, β).
pub fn dim_formula(beta: f64, rho: f64, delta: f64, d: usize) -> DimFormula {
    let num = d as f64 * (1.0 - rho) + rho * beta;
    let value = (num / delta).min(beta);
    let delta_star = num / beta;
    DimFormula { value, delta_star, saturated: rho < 1.0 && delta <= delta_star }
}

/// Upper bound for the conditioned limsup set, or `Empty` when τ*(α) < 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "bound", content = "value", rename_all = "lowercase")]
pub enum Bound {
    Empty,
    Value(f64),
}

impl Bound {
    pub fn value_or(&self, empty: f64) -> f64 {
        match self {
            Bound::Empty => empty,
            Bound::Value(v) => *v,
        }
    }
}

pub fn theorem1_upper_bound(tau_star: f64, rho: f64, delta: f64, d: usize) -> Bound {
    if tau_star < 0.0 || tau_star == f64::NEG_INFINITY {
        return Bound::Empty;
    }
    let num = d as f64 * (1.0 - rho) + rho * tau_star;
    Bound::Value((num / delta).min(tau_star))
}

/// ε^ρ_{M}(λ) = max(ε⁻, ε⁺) from λ^{α±ε±} = M^∓ (2λ)^{α ± ψ(2λ) ± 2αχ(2λ)}.
pub fn eps_schedule(m: f64, alpha: f64, gauges: &GaugeParams, lambda: f64, rho: f64) -> Result<f64> {
    if !(lambda > 0.0) || lambda >= gauges.r_cap {
        return Err(Error::Domain(format!("scale {lambda} outside (0, r_cap)")));
    }
    if !(m >= 1.0) {
        return Err(Error::Domain(format!("M must be at least 1, got {m}")));
    }
    let two = 2.0 * lambda;
    let bend = gauges.psi(two) + 2.0 * alpha * gauges.chi(two, rho);
    let (ll, l2) = (lambda.ln(), two.ln());
    let eps_plus = (-m.ln() + (alpha + bend) * l2) / ll - alpha;
    let eps_minus = alpha - (m.ln() + (alpha - bend) * l2) / ll;
    Ok(eps_plus.max(eps_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::Gauge;

    #[test]
    fn dim_formula_examples() {
        let a = dim_formula(0.6, 1.0, 2.0, 1);
        assert_eq!(a.value, 0.3);
        assert_eq!(a.delta_star, 1.0);
        assert!(!a.saturated);
        let b = dim_formula(0.5, 0.5, 1.0, 1);
        assert_eq!((b.value, b.delta_star, b.saturated), (0.5, 1.5, true));
        assert_eq!(dim_formula(0.5, 0.5, 3.0, 1).value, 0.25);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(theorem1_upper_bound(-0.1, 1.0, 1.0, 1), Bound::Empty);
        assert_eq!(theorem1_upper_bound(1.0, 1.0, 2.0, 1), Bound::Value(0.5));
        assert_eq!(theorem1_upper_bound(0.3, 0.5, 2.0, 1), Bound::Value(0.3));
    }

    #[test]
    fn eps_schedule_pure_correction() {
        let g = GaugeParams { psi: Gauge::Zero, chi: Gauge::Zero, ..Default::default() };
        for lambda in [1e-2, 1e-5, 1e-12] {
            let e = eps_schedule(1.0, 0.7, &g, lambda, 1.0).unwrap();
            assert!((e - 0.7 * 2f64.ln() / lambda.ln().abs()).abs() < 1e-12);
        }
        assert!(eps_schedule(1.0, 0.7, &g, 0.1, 1.0).is_err());
    }

    #[test]
    fn eps_schedule_solves_identity() {
        let g = GaugeParams { chi: Gauge::LogLogPower { kappa: 2.0 }, ..Default::default() };
        let (m, a, l, rho) = (2.0, 0.72, 1e-4, 0.5);
        let two = 2.0 * l;
        let bend = g.psi(two) + 2.0 * a * g.chi(two, rho);
        let e = eps_schedule(m, a, &g, l, rho).unwrap();
        let minus_side = (a - e) * l.ln();
        let minus_target = m.ln() + (a - bend) * two.ln();
        let plus_side = (a + e) * l.ln();
        let plus_target = -m.ln() + (a + bend) * two.ln();
        assert!((minus_side - minus_target).abs() < 1e-9 || (plus_side - plus_target).abs() < 1e-9);
        assert!(minus_side <= minus_target + 1e-9 && plus_side <= plus_target + 1e-9);
    }

    #[test]
    fn eps_shrinks_with_scale_and_ignores_chi_at_rho_one() {
        let g = GaugeParams { chi: Gauge::LogLogPower { kappa: 1.0 }, ..Default::default() };
        let e1 = eps_schedule(2.0, 0.7, &g, 1e-3, 1.0).unwrap();
        let e2 = eps_schedule(2.0, 0.7, &g, 1e-30, 1.0).unwrap();
        let e3 = eps_schedule(2.0, 0.7, &g, 1e-200, 1.0).unwrap();
        assert!(e1 > e2 && e2 > e3);
        let g0 = GaugeParams { chi: Gauge::Zero, ..g };
        assert_eq!(eps_schedule(2.0, 0.7, &g0, 1e-3, 1.0).unwrap(), e1);
    }
}
