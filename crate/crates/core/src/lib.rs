//! Hamiltonian systems with hidden symmetries.
//!
//! Every phase-space function, metric and tensor field is written once over
//! a generic [`autodiff::Scalar`] and evaluated at plain floats or nested dual
//! numbers, which gives brackets, flows, curvature and special-tensor
//! residuals from one definition.

pub mod autodiff;
pub mod blackholes;
pub mod dynamics;
pub mod eisenhart;
pub mod error;
pub mod geometry;
pub mod lax;
pub mod linalg;
pub mod sampling;
pub mod systems;

pub use error::{Error, Result};
