//! Phase-space kernel: observables, brackets, flows and drift monitors.

mod bracket;
mod dop853_tableau;
mod drift;
mod integrate;
mod levi_civita;
mod phase;
mod system;

pub use bracket::{
    bracket_table, covariant_poisson_bracket, covariant_to_canonical, gradient_rank, gradient_singular_values,
    jacobi_residual, poisson_bracket, symplectic_gradient,
};
pub use drift::{conservation_drift, drift_of, drift_of_series, linear_trend, Drift, DRIFT_FLOOR};
pub use integrate::{
    flow_rhs, integrate_flow, integrate_ode, IntegratorConfig, Method, OdeRhs, OdeSolution, Sampling, StepStats,
    Trajectory,
};
pub use levi_civita::{levi_civita_residual, max_levi_civita_residual};
pub use phase::{Combination, Degree, Observable, PhaseFn, PhasePoint};
pub use system::{HamiltonianSystem, NaturalDecomposition, StatePredicate};
pub(crate) use system::quadratic_form;
