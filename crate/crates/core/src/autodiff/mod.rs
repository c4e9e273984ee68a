//! Forward-mode automatic differentiation.
//!
//! Functions are written once against [`Scalar`]; plain values, gradients and
//! Hessians come from evaluating them at `f64`, [`D1`] or [`D2`].

mod derivative;
mod dual;
mod field;

pub use derivative::{directional, fd_gradient, fd_hessian, fd_step, gradient, hessian, jacobian};
pub use dual::{constants, seed, seed_along, Dual, Scalar, D1, D2, D3};
pub use field::{DynField, ErasedField, FieldFn};

/// Derivative order available through a [`DynField`].
pub const MAX_ERASED_ORDER: usize = 3;
