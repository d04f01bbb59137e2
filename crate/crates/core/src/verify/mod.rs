//! Manufactured solutions, error norms, convergence tables and the inf-sup
//! diagnostic.

mod convergence;
mod errors;
mod infsup;
mod manufactured;

pub use convergence::{run_convergence, run_level, run_study, solve_case, write_json, RateTable, Rates};
pub use errors::{
    compute_errors, eval_pressure, eval_velocity, interpolate_multiplier, interpolate_pressure, interpolate_velocity,
    multiplier_integral, ErrorReport, ERROR_QUADRATURE_DEGREE,
};
pub use infsup::{infsup_estimate, InfSupMode, MAX_DENSE_VELOCITY_DOFS};
pub use manufactured::{ManufacturedCase, ScalarField, TensorField};
