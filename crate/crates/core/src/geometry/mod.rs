//! Metric geometry: connection, curvature and special-tensor residuals.

mod connection;
mod metric;
mod polarization;
mod residuals;
mod tensor;

pub use connection::{christoffel, christoffel_generic, covariant_derivative, curvature, geodesic_system, CurvatureReport};
pub use metric::{InverseMetric, MetricField, PointPredicate, Signature};
pub use polarization::{momentum_polynomial, schouten_nijenhuis, Polarization};
pub use residuals::{
    conformal_factor, conformal_killing_tensor_residual, cky_residual, cky_residual_with_tol, generalized_killing_residuals,
    killing_tensor_residual, killing_vector_residual, ky_square, robertson_residual, CkyReport, FLAG_TOL,
};
pub use tensor::{ExteriorDerivative, HodgeDual, KySquare, Position, Symmetry, TensorField, Wedge};
