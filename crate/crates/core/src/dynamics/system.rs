use std::fmt;
use std::sync::Arc;

use crate::autodiff::{seed, DynField, FieldFn, Scalar};
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::linalg::Mat;

use super::phase::{Degree, Observable, PhaseFn, PhasePoint};

/// `H = (1/2m) g^{μν} Π_μ Π_ν + V` with `Π = p − eA`.
#[derive(Clone, Debug)]
pub struct NaturalDecomposition {
    pub metric: MetricField,
    pub potential: Option<DynField>,
    pub vector_potential: Option<DynField>,
    pub charge: f64,
    pub mass: f64,
}

impl NaturalDecomposition {
    pub fn new(metric: MetricField, mass: f64) -> Self {
        Self { metric, potential: None, vector_potential: None, charge: 0.0, mass }
    }

    /// Scalar potential `V(q)`, a field returning one value.
    pub fn with_potential(mut self, v: impl FieldFn) -> Self {
        self.potential = Some(DynField::new(v));
        self
    }

    /// Lower-index vector potential `A_μ(q)` with charge `e`.
    pub fn with_vector_potential(mut self, charge: f64, a: impl FieldFn) -> Self {
        self.charge = charge;
        self.vector_potential = Some(DynField::new(a));
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.dim
    }

    pub fn potential<T: Scalar>(&self, q: &[T]) -> T {
        self.potential.as_ref().map_or(T::zero(), |v| v.eval(q)[0])
    }

    pub fn vector_potential<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.vector_potential.as_ref().map_or_else(|| vec![T::zero(); q.len()], |a| a.eval(q))
    }

    /// `Π_μ = p_μ − e A_μ(q)`.
    pub fn covariant_momenta<T: Scalar>(&self, q: &[T], p: &[T]) -> Vec<T> {
        let a = self.vector_potential(q);
        p.iter().zip(&a).map(|(&pi, &ai)| pi - ai * self.charge).collect()
    }

    /// Inverse of [`covariant_momenta`](Self::covariant_momenta).
    pub fn canonical_momenta<T: Scalar>(&self, q: &[T], pi: &[T]) -> Vec<T> {
        let a = self.vector_potential(q);
        pi.iter().zip(&a).map(|(&x, &ai)| x + ai * self.charge).collect()
    }

    pub fn hamiltonian<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let pi = self.covariant_momenta(q, p);
        let kinetic = match self.metric.inverse(q) {
            Ok(ginv) => quadratic_form(&ginv, &pi),
            Err(_) => T::cst(f64::NAN),
        };
        kinetic / (2.0 * self.mass) + self.potential(q)
    }

    /// `F_{μν} = ∂_μ A_ν − ∂_ν A_μ`.
    pub fn field_strength<T: Scalar>(&self, q: &[T]) -> Mat<T> {
        let n = q.len();
        let Some(a) = &self.vector_potential else {
            return Mat::zeros(n, n);
        };
        let da: Vec<Vec<T>> = (0..n).map(|mu| a.eval(&seed(q, mu)).iter().map(|d| d.eps).collect()).collect();
        Mat::from_fn(n, n, |mu, nu| da[mu][nu] - da[nu][mu])
    }

    /// Gradient `∂_μ V`.
    pub fn potential_gradient<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        match &self.potential {
            None => vec![T::zero(); q.len()],
            Some(v) => (0..q.len()).map(|mu| v.eval(&seed(q, mu))[0].eps).collect(),
        }
    }
}

pub(crate) fn quadratic_form<T: Scalar>(m: &Mat<T>, v: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..v.len() {
        for j in 0..v.len() {
            s += m[(i, j)] * v[i] * v[j];
        }
    }
    s
}

struct NaturalH(NaturalDecomposition);

impl PhaseFn for NaturalH {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        self.0.hamiltonian(q, p)
    }
}

pub type StatePredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A Hamiltonian on `T*ℝⁿ` (or a coordinate patch of a cotangent bundle).
#[derive(Clone)]
pub struct HamiltonianSystem {
    pub name: String,
    pub n: usize,
    pub h: Observable,
    pub natural: Option<NaturalDecomposition>,
    domain: Option<StatePredicate>,
}

impl fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("natural", &self.natural.is_some())
            .finish()
    }
}

impl HamiltonianSystem {
    pub fn new(name: impl Into<String>, h: Observable) -> Self {
        Self { name: name.into(), n: h.n(), h, natural: None, domain: None }
    }

    /// Build `H` from its natural decomposition.
    pub fn natural(name: impl Into<String>, decomposition: NaturalDecomposition) -> Self {
        let n = decomposition.dim();
        let h = Observable::new("H", Degree::Poly(2), n, NaturalH(decomposition.clone()));
        Self { name: name.into(), n, h, natural: Some(decomposition), domain: None }
    }

    /// Attach a decomposition to a directly written `H`.
    pub fn with_decomposition(mut self, decomposition: NaturalDecomposition) -> Self {
        self.natural = Some(decomposition);
        self
    }

    /// Restrict the flow to states where `pred(q, p)` holds.
    pub fn with_domain(mut self, pred: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.domain = Some(Arc::new(pred));
        self
    }

    pub fn in_domain(&self, y: &[f64]) -> bool {
        self.domain.as_ref().is_none_or(|d| d(y))
    }

    pub fn domain(&self) -> Option<&StatePredicate> {
        self.domain.as_ref()
    }

    pub fn decomposition(&self) -> Result<&NaturalDecomposition> {
        self.natural
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("{} has no natural decomposition", self.name)))
    }

    pub fn energy(&self, x: &PhasePoint) -> f64 {
        self.h.value(x)
    }

    /// Largest relative mismatch between `H` and its decomposition at `points`.
    pub fn decomposition_mismatch(&self, points: &[PhasePoint]) -> Result<f64> {
        let d = self.decomposition()?;
        Ok(points
            .iter()
            .map(|x| {
                let h = self.h.value(x);
                let hn = d.hamiltonian(&x.q, &x.p);
                (h - hn).abs() / h.abs().max(1.0)
            })
            .fold(0.0, f64::max))
    }

    /// Hamilton's equations `ẏ = (∂H/∂p, −∂H/∂q)` on a flat state.
    pub fn vector_field(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let g: Vec<f64> = (0..2 * n).map(|i| self.h.field().eval(&seed(y, i))[0].eps).collect();
        let mut out = vec![0.0; 2 * n];
        out[..n].copy_from_slice(&g[n..]);
        for mu in 0..n {
            out[n + mu] = -g[mu];
        }
        out
    }
}
