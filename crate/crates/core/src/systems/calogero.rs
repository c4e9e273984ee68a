use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{Combination, Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::lax::{LaxFn, LaxPair};
use crate::linalg::{factorial, CMat, Cx};
use crate::sampling::SINGULAR_MARGIN;

use super::{Parameter, SystemSpec};

/// Rational Calogero model `H = ½Σp² + g² Σ_{i<j} (q_i − q_j)⁻²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calogero {
    pub n: usize,
    pub g: f64,
}

struct Pair2(f64);

impl FieldFn for Pair2 {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let mut s = T::zero();
        for i in 0..q.len() {
            for j in i + 1..q.len() {
                let d = q[i] - q[j];
                s += (d * d).recip();
            }
        }
        vec![s * (self.0 * self.0)]
    }
}

#[derive(Clone, Copy)]
struct CalogeroLax(f64);

impl LaxFn for CalogeroLax {
    fn lax<T: Scalar>(&self, q: &[T], p: &[T]) -> CMat<T> {
        CMat::from_fn(q.len(), |j, k| {
            if j == k {
                Cx::real(p[j])
            } else {
                Cx::new(T::zero(), (q[j] - q[k]).recip() * self.0)
            }
        })
    }

    // i times the real matrix g(δ_jk Σ_{l≠j} (q_j−q_l)⁻² − (1−δ_jk)(q_j−q_k)⁻²)
    fn partner<T: Scalar>(&self, q: &[T], _p: &[T]) -> CMat<T> {
        let n = q.len();
        CMat::from_fn(n, |j, k| {
            let v = if j == k {
                (0..n).filter(|&l| l != j).fold(T::zero(), |s, l| {
                    let d = q[j] - q[l];
                    s + (d * d).recip()
                })
            } else {
                let d = q[j] - q[k];
                -(d * d).recip()
            };
            Cx::new(T::zero(), v * self.0)
        })
    }
}

struct Half(bool);

impl PhaseFn for Half {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        if self.0 {
            q.iter().fold(T::zero(), |s, &x| s + x * x) * 0.5
        } else {
            q.iter().zip(p).fold(T::zero(), |s, (&x, &y)| s + x * y) * -0.5
        }
    }
}

impl Calogero {
    pub fn new(n: usize, g: f64) -> Result<Self> {
        if n < 2 || g == 0.0 || !g.is_finite() {
            return Err(Error::Config(format!("Calogero needs n ≥ 2 and g ≠ 0, got n = {n}, g = {g}")));
        }
        Ok(Self { n, g })
    }

    pub fn system(&self) -> HamiltonianSystem {
        let n = self.n;
        let d = NaturalDecomposition::new(MetricField::flat(n), 1.0).with_potential(Pair2(self.g));
        HamiltonianSystem::natural(format!("calogero-{n}"), d).with_domain(move |y| {
            let q = &y[..n];
            (0..n).all(|i| (i + 1..n).all(|j| (q[i] - q[j]).abs() > SINGULAR_MARGIN))
        })
    }

    pub fn lax(&self) -> LaxPair {
        LaxPair::new(format!("calogero-{}", self.n), self.n, self.n, true, CalogeroLax(self.g))
    }

    /// `I_j = (1/j!) tr L^j`, `j = 1..=n`.
    pub fn invariants(&self) -> Vec<Observable> {
        let lax = self.lax();
        (1..=self.n).map(|j| lax.trace_observable(j, 1.0 / factorial(j), format!("I{j}"))).collect()
    }

    /// `K = ½Σq²`.
    pub fn k(&self) -> Observable {
        Observable::new("K", Degree::Poly(0), self.n, Half(true))
    }

    /// `D = −½Σ p q`.
    pub fn d(&self) -> Observable {
        Observable::new("D", Degree::Poly(1), self.n, Half(false))
    }

    /// `N_j = (1/j){K, I_j}`; `Ĩ_j = N_j − t I_j` is conserved.
    pub fn n_j(&self, j: usize) -> Observable {
        let ij = &self.invariants()[j - 1];
        self.k().bracket(ij).scaled(1.0 / j as f64).with_name(format!("N{j}"))
    }

    /// `Ĩ_j(t, x) = N_j(x) − t I_j(x)`.
    pub fn tilde(&self, j: usize, t: f64, x: &PhasePoint) -> f64 {
        self.n_j(j).value(x) - t * self.invariants()[j - 1].value(x)
    }

    /// `Ĩ_i I_j − Ĩ_j I_i`, which has no explicit time dependence.
    pub fn combination(&self, i: usize, j: usize) -> Observable {
        let inv = self.invariants();
        Combination::new(self.n)
            .term(1.0, vec![self.n_j(i), inv[j - 1].clone()])
            .term(-1.0, vec![self.n_j(j), inv[i - 1].clone()])
            .build(format!("C{i}{j}"))
    }

    pub fn spec(&self) -> SystemSpec {
        let sys = self.system();
        let mut invariants = self.invariants();
        for i in 1..=self.n {
            for j in i + 1..=self.n {
                invariants.push(self.combination(i, j));
            }
        }
        let spread: Vec<f64> = (0..self.n).map(|i| i as f64 - (self.n as f64 - 1.0) / 2.0).collect();
        let momenta: Vec<f64> = (0..self.n).map(|i| 0.3 * (i as f64 + 1.0).sin()).collect();
        SystemSpec {
            name: format!("calogero-{}", self.n),
            parameters: vec![Parameter::new("n", self.n as f64, "particles"), Parameter::new("g", self.g, "coupling")],
            system: sys,
            invariants,
            lax: Some(self.lax()),
            reference: PhasePoint::new(spread, momenta).ok(),
        }
    }
}
