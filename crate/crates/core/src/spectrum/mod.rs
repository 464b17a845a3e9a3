//! Partition functions, scaling-function fits, Legendre transforms and the
//! dimension formulas for conditioned limsup sets.

mod formulas;
mod gauges;
mod legendre;
mod partition;

pub use formulas::{dim_formula, eps_schedule, theorem1_upper_bound, Bound, DimFormula};
pub use gauges::{Gauge, GaugeParams, R_CAP};
pub use legendre::{default_alpha_grid, legendre, legendre_point};
pub use partition::{log_partition_sum, partition_exponent, q_grid, tau_fit, SpectrumTable};
