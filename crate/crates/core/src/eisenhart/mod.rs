//! Eisenhart–Duval lifts: dynamics with a potential as geodesics of a
//! metric with one or more extra dimensions, and the lift of polynomial
//! invariants to Killing tensors.

mod null;
mod scalar;

use std::sync::Arc;

use crate::autodiff::Scalar;
use crate::dynamics::{Degree, Observable, PhaseFn};
use crate::error::{Error, Result};
use crate::linalg::Mat;

pub use null::{null_lift, NullLift, CONSTRAINT_TOL};
pub use scalar::{generalized_lift, lift_toda, scalar_lift, LiftedToda, ScalarLift, POTENTIAL_FLOOR};

/// Which lift a scenario asks for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftKind {
    Null,
    Scalar,
    Generalized,
}

/// `K_i(q, p)` as the exact combination `Σ_j W_ij K(q, λ_j p)` with `λ_j = j`.
struct Homogeneous {
    f: Observable,
    weights: Arc<Vec<f64>>,
}

impl PhaseFn for Homogeneous {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let mut s = T::zero();
        for (j, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let scaled: Vec<T> = p.iter().map(|&x| x * j as f64).collect();
            s += self.f.eval_qp(q, &scaled) * w;
        }
        s
    }
}

/// Split an observable polynomial of degree `≤ k` in the momenta into its
/// homogeneous parts by inverting the Vandermonde system of momentum scalings.
///
/// The parts are attached as the observable's grading; the zero parts are dropped.
pub fn grade_by_scaling(f: &Observable, k: u32) -> Result<Observable> {
    if let Degree::Poly(d) = f.degree {
        if d > k {
            return Err(Error::Type(format!("{} has degree {d}, above the requested {k}", f.name)));
        }
    }
    let m = k as usize + 1;
    let vander = Mat::from_fn(m, m, |j, i| (j as f64).powi(i as i32));
    let w = vander.inverse()?;
    let parts = (0..m)
        .map(|i| {
            let weights: Vec<f64> = (0..m).map(|j| w[(i, j)]).collect();
            let part = Observable::new(
                format!("{}[{i}]", f.name),
                Degree::Poly(i as u32),
                f.n(),
                Homogeneous { f: f.clone(), weights: Arc::new(weights) },
            );
            (i as u32, part)
        })
        .collect();
    Ok(f.clone().with_grading(parts))
}

/// Size of each graded part over the sample points, as `(degree, max |K_i|)`.
pub fn grading_profile(f: &Observable, points: &[crate::dynamics::PhasePoint]) -> Result<Vec<(u32, f64)>> {
    let parts = f.grading().ok_or_else(|| Error::Config(format!("{} carries no momentum grading", f.name)))?;
    Ok(parts
        .iter()
        .map(|(i, o)| (*i, points.iter().map(|x| o.value(x).abs()).fold(0.0, f64::max)))
        .collect())
}
