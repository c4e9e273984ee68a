use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{DynField, FieldFn, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    Riemannian,
    Lorentzian,
    Other,
}

pub type PointPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Metric `g_{μν}(x)` with lower indices, stored as a flat `n×n` field.
#[derive(Clone)]
pub struct MetricField {
    pub name: String,
    pub dim: usize,
    pub signature: Signature,
    field: DynField,
    singular: Option<PointPredicate>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("signature", &self.signature)
            .finish()
    }
}

impl MetricField {
    pub fn new(name: impl Into<String>, dim: usize, signature: Signature, g: impl FieldFn) -> Self {
        Self::from_field(name, dim, signature, DynField::new(g))
    }

    pub fn from_field(name: impl Into<String>, dim: usize, signature: Signature, field: DynField) -> Self {
        Self { name: name.into(), dim, signature, field, singular: None }
    }

    /// Points where the predicate holds are refused by [`check_regular`](Self::check_regular).
    pub fn with_singular_locus(mut self, pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.singular = Some(Arc::new(pred));
        self
    }

    pub fn singular_locus(&self) -> Option<&PointPredicate> {
        self.singular.as_ref()
    }

    pub fn field(&self) -> &DynField {
        &self.field
    }

    pub fn g<T: Scalar>(&self, x: &[T]) -> Mat<T> {
        Mat::from_vec(self.dim, self.dim, self.field.eval(x))
    }

    pub fn inverse<T: Scalar>(&self, x: &[T]) -> Result<Mat<T>> {
        self.g(x).inverse()
    }

    pub fn check_regular(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Geometry(format!(
                "point has {} coordinates, metric {} expects {}",
                x.len(),
                self.name,
                self.dim
            )));
        }
        if let Some(s) = &self.singular {
            if s(x) {
                return Err(Error::Geometry(format!("point {x:?} lies on the singular locus of {}", self.name)));
            }
        }
        Ok(())
    }

    /// Largest asymmetry `|g_{μν} − g_{νμ}|` at `x`.
    pub fn asymmetry(&self, x: &[f64]) -> f64 {
        let g = self.g(x);
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..i {
                m = m.max((g[(i, j)] - g[(j, i)]).abs());
            }
        }
        m
    }

    /// 2-norm condition number of `g` at `x`.
    pub fn condition_number(&self, x: &[f64]) -> f64 {
        let sv = self.g(x).to_nalgebra().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Number of negative eigenvalues of `g` at `x`.
    pub fn negative_eigenvalues(&self, x: &[f64]) -> usize {
        let g = self.g(x).to_nalgebra();
        let sym = (&g + g.transpose()) * 0.5;
        sym.symmetric_eigenvalues().iter().filter(|&&e| e < 0.0).count()
    }

    /// Euclidean metric on `ℝⁿ`.
    pub fn flat(dim: usize) -> Self {
        Self::new(format!("flat{dim}"), dim, Signature::Riemannian, Flat(dim))
    }

    /// Round 2-sphere of radius `r` in `(θ, φ)`.
    pub fn sphere2(r: f64) -> Self {
        Self::new("sphere2", 2, Signature::Riemannian, Sphere2(r))
            .with_singular_locus(|x| x[0].sin().abs() < 1e-3)
    }

    /// Diagonal metric from a generic diagonal map.
    pub fn diagonal(name: impl Into<String>, dim: usize, signature: Signature, diag: impl FieldFn) -> Self {
        Self::new(name, dim, signature, Diagonal { dim, diag: DynField::new(diag) })
    }
}

struct Flat(usize);

impl FieldFn for Flat {
    fn eval<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        let n = self.0;
        (0..n * n).map(|k| if k / n == k % n { T::one() } else { T::zero() }).collect()
    }
}

struct Sphere2(f64);

impl FieldFn for Sphere2 {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let r2 = self.0 * self.0;
        let s = x[0].sin();
        vec![T::cst(r2), T::zero(), T::zero(), s * s * r2]
    }
}

struct Diagonal {
    dim: usize,
    diag: DynField,
}

impl FieldFn for Diagonal {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let d = self.diag.eval(x);
        let n = self.dim;
        (0..n * n).map(|k| if k / n == k % n { d[k / n] } else { T::zero() }).collect()
    }
}

/// Inverse metric `g^{μν}` as a field, `NaN` where `g` is singular.
pub struct InverseMetric(pub MetricField);

impl FieldFn for InverseMetric {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        match self.0.inverse(x) {
            Ok(m) => m.data,
            Err(_) => vec![T::cst(f64::NAN); self.0.dim * self.0.dim],
        }
    }
}
