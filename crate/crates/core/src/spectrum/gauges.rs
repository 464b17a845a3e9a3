use serde::{Deserialize, Serialize};

/// e^{-e}: below this radius every gauge formula is defined.
pub const R_CAP: f64 = 0.065_988_035_845_312_54;

/// Gauge families vanishing at 0+, all in natural logarithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Gauge {
    Zero,
    /// C |ln r|^{-1/2} (ln ln |ln r|)^{1/2}.
    PhiC { c: f64 },
    /// C |ln r|^{-1/2} (ln |ln r|)^γ.
    PsiGamma { c: f64, gamma: f64 },
    /// (ln |ln r|)^{-κ}.
    LogLogPower { kappa: f64 },
}

impl Gauge {
    fn raw(&self, u: f64) -> f64 {
        match *self {
            Gauge::Zero => 0.0,
            Gauge::PhiC { c } => c * u.powf(-0.5) * u.ln().ln().max(0.0).sqrt(),
            Gauge::PsiGamma { c, gamma } => c * u.powf(-0.5) * u.ln().powf(gamma),
            Gauge::LogLogPower { kappa } => u.ln().powf(-kappa),
        }
    }

    /// |ln r| at which the formula stops being non-decreasing in r.
    fn monotone_floor(&self) -> f64 {
        match *self {
            Gauge::PhiC { .. } => {
                // Root of ln u · ln ln u = 1 by bisection on [e, e^3].
                let (mut lo, mut hi) = (std::f64::consts::E, 20.0f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid.ln() * mid.ln().ln() < 1.0 { lo = mid } else { hi = mid }
                }
                0.5 * (lo + hi)
            }
            Gauge::PsiGamma { gamma, .. } => (2.0 * gamma).exp(),
            _ => 0.0,
        }
    }

    /// Value at r, clamped to the value at min(r_cap, monotonicity threshold) above it.
    pub fn eval_capped(&self, r: f64, r_cap: f64) -> f64 {
        if matches!(self, Gauge::Zero) || r <= 0.0 {
            return 0.0;
        }
        let u_min = (-r_cap.ln()).max(self.monotone_floor()).max(std::f64::consts::E);
        let u = (-r.ln()).max(u_min);
        self.raw(u)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.eval_capped(r, R_CAP)
    }
}

/// The gauges φ, ψ, χ used by conditions and audits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub phi: Gauge,
    pub psi: Gauge,
    pub chi: Gauge,
    pub r_cap: f64,
}

impl Default for GaugeParams {
    fn default() -> Self {
        Self {
            phi: Gauge::PhiC { c: 1.0 },
            psi: Gauge::PsiGamma { c: 0.1, gamma: 1.0 },
            chi: Gauge::Zero,
            r_cap: R_CAP,
        }
    }
}

impl GaugeParams {
    pub fn phi(&self, r: f64) -> f64 {
        self.phi.eval_capped(r, self.r_cap)
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.psi.eval_capped(r, self.r_cap)
    }

    /// χ, identically zero when ρ = 1.
    pub fn chi(&self, r: f64, rho: f64) -> f64 {
        if rho >= 1.0 { 0.0 } else { self.chi.eval_capped(r, self.r_cap) }
    }

    /// ξ_{ρ,δ}(r) = (4+d) φ(r) + χ(r).
    pub fn xi(&self, r: f64, d: usize, rho: f64) -> f64 {
        (4 + d) as f64 * self.phi(r) + self.chi(r, rho)
    }
}
