use std::sync::Arc;

use crate::autodiff::Scalar;
use crate::dynamics::{Degree, HamiltonianSystem, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};

use super::{Parameter, SystemSpec};

/// Tolerance beyond which initial data are projected onto `Σx² = 1`, `x·p = 0`.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Neumann problem: a particle on `S^{n−1}` in the potential `½Σω_i² x_i²`,
/// written on `T*ℝⁿ` through the rotation generators `J_lm = x_l p_m − x_m p_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Neumann {
    pub omega: Vec<f64>,
}

#[derive(Clone, Copy)]
enum Q {
    H,
    F(usize),
    Ellipsoid,
}

#[derive(Clone)]
struct NeumannFn {
    w2: Arc<Vec<f64>>,
    q: Q,
}

fn j<T: Scalar>(q: &[T], p: &[T], l: usize, m: usize) -> T {
    q[l] * p[m] - q[m] * p[l]
}

impl NeumannFn {
    fn uhlenbeck<T: Scalar>(&self, q: &[T], p: &[T], i: usize) -> T {
        let mut f = q[i] * q[i];
        for k in 0..q.len() {
            if k != i {
                let jik = j(q, p, i, k);
                f += jik * jik / (self.w2[i] - self.w2[k]);
            }
        }
        f
    }
}

impl PhaseFn for NeumannFn {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let n = q.len();
        match self.q {
            Q::H => {
                let mut s = T::zero();
                for l in 0..n {
                    for m in l + 1..n {
                        let v = j(q, p, l, m);
                        s += v * v;
                    }
                    s += q[l] * q[l] * self.w2[l];
                }
                s * 0.5
            }
            Q::F(i) => self.uhlenbeck(q, p, i),
            Q::Ellipsoid => (0..n).fold(T::zero(), |s, i| s + self.uhlenbeck(q, p, i) / self.w2[i]),
        }
    }
}

/// `(v, w)_ω = Σ v_i w_i / ω_i²`.
pub fn omega_product(w2: &[f64], v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).zip(w2).map(|((a, b), c)| a * b / c).sum()
}

impl Neumann {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.len() < 2 || omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config(format!("Neumann needs at least two finite frequencies, got {omega:?}")));
        }
        let w2: Vec<f64> = omega.iter().map(|w| w * w).collect();
        if w2.windows(2).any(|p| !(p[1] > p[0])) || w2[0] == 0.0 {
            return Err(Error::Degenerate(format!("Neumann frequencies must have strictly increasing nonzero squares, got {omega:?}")));
        }
        Ok(Self { omega })
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    fn w2(&self) -> Arc<Vec<f64>> {
        Arc::new(self.omega.iter().map(|w| w * w).collect())
    }

    fn obs(&self, name: impl Into<String>, degree: Degree, q: Q) -> Observable {
        Observable::new(name, degree, self.n(), NeumannFn { w2: self.w2(), q })
    }

    pub fn system(&self) -> HamiltonianSystem {
        HamiltonianSystem::new(format!("neumann-{}", self.n()), self.obs("H", Degree::Poly(2), Q::H))
    }

    /// Uhlenbeck integrals `F_i = x_i² + Σ_{k≠i} J_ik²/(ω_i² − ω_k²)`.
    pub fn uhlenbeck(&self) -> Vec<Observable> {
        (0..self.n()).map(|i| self.obs(format!("F{}", i + 1), Degree::Poly(2), Q::F(i))).collect()
    }

    /// `H_ell = Σ F_i / ω_i²`, the geodesic Hamiltonian of the ellipsoid.
    pub fn ellipsoid_hamiltonian(&self) -> Observable {
        self.obs("H_ell", Degree::Poly(2), Q::Ellipsoid)
    }

    /// Onto `Σx² = 1`, `x·p = 0` when either fails by more than [`CONSTRAINT_TOL`].
    pub fn project(&self, x: &PhasePoint) -> Result<PhasePoint> {
        let r2: f64 = x.q.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Err(Error::Degenerate("Neumann initial position at the origin".into()));
        }
        let xp: f64 = x.q.iter().zip(&x.p).map(|(a, b)| a * b).sum();
        if (r2 - 1.0).abs() <= CONSTRAINT_TOL && xp.abs() <= CONSTRAINT_TOL {
            return Ok(x.clone());
        }
        let r = r2.sqrt();
        let q: Vec<f64> = x.q.iter().map(|v| v / r).collect();
        let radial: f64 = q.iter().zip(&x.p).map(|(a, b)| a * b).sum();
        let p = x.p.iter().zip(&q).map(|(b, a)| b - radial * a).collect();
        PhasePoint::new(q, p)
    }

    /// `ξ = P − ((X,P)_ω / (X,X)_ω) X`, the velocity on the ellipsoid.
    pub fn xi(&self, x: &PhasePoint) -> Vec<f64> {
        let w2 = self.w2();
        let c = omega_product(&w2, &x.q, &x.p) / omega_product(&w2, &x.q, &x.q);
        x.p.iter().zip(&x.q).map(|(p, q)| p - c * q).collect()
    }

    /// `(ξ, ξ)_ω`, which stays at 1 on trajectories with `H_ell = 0`.
    pub fn xi_norm(&self, x: &PhasePoint) -> f64 {
        let xi = self.xi(x);
        omega_product(&self.w2(), &xi, &xi)
    }

    /// Rescale the tangential momentum of a constrained point so that
    /// `(ξ,ξ)_ω = 1`, equivalently `H_ell = 0`.
    pub fn ellipsoid_initial(&self, x: &PhasePoint) -> Result<PhasePoint> {
        let y = self.project(x)?;
        let s = self.xi_norm(&y);
        if !(s > 0.0) {
            return Err(Error::Degenerate("ellipsoid initial data need nonzero tangential momentum".into()));
        }
        PhasePoint::new(y.q.clone(), y.p.iter().map(|v| v / s.sqrt()).collect())
    }

    pub fn spec(&self) -> SystemSpec {
        let n = self.n();
        let mut invariants = self.uhlenbeck();
        invariants.push(self.ellipsoid_hamiltonian());
        let q: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * i as f64).collect();
        let p: Vec<f64> = (0..n).map(|i| 0.5 * ((i as f64) * 2.1 + 0.4).sin()).collect();
        let reference = PhasePoint::new(q, p).ok().and_then(|x| self.project(&x).ok());
        SystemSpec {
            name: format!("neumann-{n}"),
            parameters: self
                .omega
                .iter()
                .enumerate()
                .map(|(i, &w)| Parameter::new(format!("omega{}", i + 1), w, "frequency"))
                .collect(),
            system: self.system(),
            invariants,
            lax: None,
            reference,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Neumann {
        Neumann::new(vec![0.5, 1.0, 1.6]).unwrap()
    }

    #[test]
    fn resting_on_an_axis() {
        let nm = three();
        let x = PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0; 3]).unwrap();
        let f: Vec<f64> = nm.uhlenbeck().iter().map(|f| f.value(&x)).collect();
        assert_eq!(f, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn ellipsoid_closed_form() {
        let nm = three();
        let x = nm.project(&PhasePoint::new(vec![0.3, -0.8, 0.5], vec![0.7, 0.2, -0.4]).unwrap()).unwrap();
        let w2: Vec<f64> = nm.omega.iter().map(|w| w * w).collect();
        let xx = omega_product(&w2, &x.q, &x.q);
        let pp = omega_product(&w2, &x.p, &x.p);
        let xp = omega_product(&w2, &x.q, &x.p);
        let closed = xx - xx * pp + xp * xp;
        assert!((nm.ellipsoid_hamiltonian().value(&x) - closed).abs() < 1e-13);
        let e = nm.ellipsoid_initial(&x).unwrap();
        assert!(nm.ellipsoid_hamiltonian().value(&e).abs() < 1e-13);
        assert!((nm.xi_norm(&e) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn repeated_frequencies_are_degenerate() {
        assert!(matches!(Neumann::new(vec![1.0, 1.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(matches!(Neumann::new(vec![1.0, -1.0]), Err(Error::Degenerate(_))));
    }
}
