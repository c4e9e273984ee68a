use std::sync::Arc;

use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{HamiltonianSystem, NaturalDecomposition, Observable, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::lax::{LaxFn, LaxPair};
use crate::linalg::{CMat, Cx};

use super::{Parameter, SystemSpec};

/// Non-periodic Toda chain `H = ½Σp² + Σ g_i² e^{2(q_i − q_{i+1})}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Toda {
    pub g: Vec<f64>,
}

struct Exponential(Arc<Vec<f64>>);

impl FieldFn for Exponential {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let mut s = T::zero();
        for (i, g) in self.0.iter().enumerate() {
            s += ((q[i] - q[i + 1]) * 2.0).exp() * (g * g);
        }
        vec![s]
    }
}

/// Lax pair with bond couplings `c_i(p)`; the plain chain has `c_i = g_i`,
/// the lifted chain multiplies them by the extra momenta.
#[derive(Clone)]
pub(crate) struct TodaLax {
    pub g: Arc<Vec<f64>>,
    /// particles; extra momenta beyond `n` scale the bonds when `lifted`
    pub n: usize,
    pub lifted: bool,
}

impl TodaLax {
    fn couplings<T: Scalar>(&self, p: &[T]) -> Vec<T> {
        self.g
            .iter()
            .enumerate()
            .map(|(i, &g)| if self.lifted { p[self.n + i] * g } else { T::cst(g) })
            .collect()
    }
}

impl LaxFn for TodaLax {
    fn lax<T: Scalar>(&self, q: &[T], p: &[T]) -> CMat<T> {
        let c = self.couplings(p);
        CMat::from_fn(self.n, |i, j| {
            if i == j {
                Cx::real(p[i])
            } else if i == j + 1 {
                Cx::real(c[j])
            } else if j == i + 1 {
                Cx::real(c[i] * ((q[i] - q[i + 1]) * 2.0).exp())
            } else {
                Cx::zero()
            }
        })
    }

    fn partner<T: Scalar>(&self, q: &[T], p: &[T]) -> CMat<T> {
        let c = self.couplings(p);
        CMat::from_fn(self.n, |i, j| {
            if j == i + 1 {
                Cx::real(c[i] * ((q[i] - q[i + 1]) * 2.0).exp() * 2.0)
            } else {
                Cx::zero()
            }
        })
    }
}

impl Toda {
    pub fn new(g: Vec<f64>) -> Result<Self> {
        if g.is_empty() || g.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::Config(format!("Toda needs n ≥ 2 and all couplings positive, got {g:?}")));
        }
        Ok(Self { g })
    }

    pub fn uniform(n: usize, g: f64) -> Result<Self> {
        Self::new(vec![g; n.saturating_sub(1)])
    }

    pub fn n(&self) -> usize {
        self.g.len() + 1
    }

    pub fn system(&self) -> HamiltonianSystem {
        let n = self.n();
        let d = NaturalDecomposition::new(MetricField::flat(n), 1.0).with_potential(Exponential(Arc::new(self.g.clone())));
        HamiltonianSystem::natural(format!("toda-{n}"), d)
    }

    pub fn lax(&self) -> LaxPair {
        let n = self.n();
        LaxPair::new(format!("toda-{n}"), n, n, false, TodaLax { g: Arc::new(self.g.clone()), n, lifted: false })
    }

    /// `I_i = (1/2^i) tr L^i`, `i = 1..=n`.
    pub fn invariants(&self) -> Vec<Observable> {
        let lax = self.lax();
        (1..=self.n()).map(|i| lax.trace_observable(i, 0.5f64.powi(i as i32), format!("I{i}"))).collect()
    }

    pub fn spec(&self) -> SystemSpec {
        let n = self.n();
        let q: Vec<f64> = (0..n).map(|i| 0.5 * i as f64 - 0.25 * (n as f64 - 1.0)).collect();
        let p: Vec<f64> = (0..n).map(|i| 0.4 * ((i as f64) * 1.7).cos()).collect();
        let mut parameters = vec![Parameter::new("n", n as f64, "particles")];
        parameters.extend(self.g.iter().enumerate().map(|(i, &g)| Parameter::new(format!("g{}", i + 1), g, "coupling")));
        SystemSpec {
            name: format!("toda-{n}"),
            parameters,
            system: self.system(),
            invariants: self.invariants(),
            lax: Some(self.lax()),
            reference: PhasePoint::new(q, p).ok(),
        }
    }
}
