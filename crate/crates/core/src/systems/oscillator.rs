//! Isotropic oscillator and its U(n) charges.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix};

use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::linalg::{CMat, Cx};

use super::{Parameter, SystemSpec};

/// `H = Σ (p²/2m + ω² q²/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Oscillator {
    pub n: usize,
    pub m: f64,
    pub omega: f64,
}

struct Quadratic(f64);

impl FieldFn for Quadratic {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        vec![q.iter().fold(T::zero(), |s, &x| s + x * x) * (0.5 * self.0 * self.0)]
    }
}

/// Anti-Hermitian traceless basis of `su(n)`: `i(E_jk + E_kj)` and
/// `E_jk − E_kj` for `j < k`, then diagonal `i·diag(1, …, 1, −l, 0, …)`
/// normalised like the `n = 2` case.
pub fn su_basis(n: usize) -> Vec<CMat<f64>> {
    let mut out = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in j + 1..n {
            out.push(CMat::from_fn(n, |a, b| if (a, b) == (j, k) || (a, b) == (k, j) { Cx::new(0.0, 1.0) } else { Cx::zero() }));
            out.push(CMat::from_fn(n, |a, b| {
                if (a, b) == (j, k) {
                    Cx::real(1.0)
                } else if (a, b) == (k, j) {
                    Cx::real(-1.0)
                } else {
                    Cx::zero()
                }
            }));
        }
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        out.push(CMat::from_fn(n, |a, b| {
            if a != b || a > l {
                Cx::zero()
            } else if a < l {
                Cx::new(0.0, norm)
            } else {
                Cx::new(0.0, -norm * l as f64)
            }
        }));
    }
    out
}

struct Charge {
    t: Arc<CMat<f64>>,
    scale: f64,
}

impl PhaseFn for Charge {
    // (1/2i) z† T z with z = q̃ + i p̃
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let n = q.len();
        let z: Vec<Cx<T>> = (0..n).map(|i| Cx::new(q[i] * self.scale, p[i] / self.scale)).collect();
        let mut s = Cx::zero();
        for a in 0..n {
            for b in 0..n {
                let t = self.t.get(a, b);
                s = s + z[a].conj() * Cx::new(T::cst(t.re), T::cst(t.im)) * z[b];
            }
        }
        // divide by 2i
        s.im * 0.5
    }
}

impl Oscillator {
    pub fn new(n: usize, m: f64, omega: f64) -> Result<Self> {
        if n < 1 || !(m > 0.0) || !(omega > 0.0) {
            return Err(Error::Config(format!("oscillator needs n ≥ 1, m > 0, ω > 0, got n = {n}, m = {m}, ω = {omega}")));
        }
        Ok(Self { n, m, omega })
    }

    /// `(ω√m)^{1/2}`, the factor taking `q` to `q̃`.
    pub fn scale(&self) -> f64 {
        (self.omega * self.m.sqrt()).sqrt()
    }

    pub fn system(&self) -> HamiltonianSystem {
        let d = NaturalDecomposition::new(MetricField::flat(self.n), self.m).with_potential(Quadratic(self.omega));
        HamiltonianSystem::natural(format!("oscillator-{}", self.n), d)
    }

    /// `C_a = (1/2i) z† T_a z` for each anti-Hermitian `T_a`.
    pub fn charges(&self, basis: &[CMat<f64>]) -> Result<Vec<Observable>> {
        basis
            .iter()
            .enumerate()
            .map(|(a, t)| {
                if t.n != self.n {
                    return Err(Error::Type(format!("generator {a} is {0}×{0}, oscillator has n = {1}", t.n, self.n)));
                }
                let defect = (0..t.n)
                    .flat_map(|i| (0..t.n).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let x = t.get(i, j) + t.get(j, i).conj();
                        x.re.hypot(x.im)
                    })
                    .fold(0.0, f64::max);
                if defect > 1e-12 {
                    return Err(Error::Type(format!("generator {a} is not anti-Hermitian")));
                }
                Ok(Observable::new(format!("C{}", a + 1), Degree::Poly(2), self.n, Charge { t: Arc::new(t.clone()), scale: self.scale() }))
            })
            .collect()
    }

    pub fn to_complex(&self, x: &PhasePoint) -> Vec<Complex<f64>> {
        let s = self.scale();
        x.q.iter().zip(&x.p).map(|(q, p)| Complex::new(q * s, p / s)).collect()
    }

    pub fn from_complex(&self, z: &[Complex<f64>]) -> Result<PhasePoint> {
        let s = self.scale();
        PhasePoint::new(z.iter().map(|c| c.re / s).collect(), z.iter().map(|c| c.im * s).collect())
    }

    /// Apply `z ↦ U z` for a unitary `U`.
    pub fn apply_unitary(&self, u: &DMatrix<Complex<f64>>, x: &PhasePoint) -> Result<PhasePoint> {
        if u.nrows() != self.n || u.ncols() != self.n {
            return Err(Error::Type(format!("unitary is {}×{}, oscillator has n = {}", u.nrows(), u.ncols(), self.n)));
        }
        let z = nalgebra::DVector::from_vec(self.to_complex(x));
        let w = u * z;
        self.from_complex(w.as_slice())
    }

    /// `exp(sT)` for an anti-Hermitian generator.
    pub fn exponential(t: &CMat<f64>, s: f64) -> DMatrix<Complex<f64>> {
        let m = DMatrix::from_fn(t.n, t.n, |i, j| {
            let c = t.get(i, j);
            Complex::new(c.re * s, c.im * s)
        });
        m.exp()
    }

    /// The finite transformation generated by `T₁ = [[0, i], [i, 0]]` in `(q̃, p̃)` variables.
    pub fn s_map(s: f64, qt: [f64; 2], pt: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        let (c, sn) = (s.cos(), s.sin());
        (
            [c * qt[0] - sn * pt[1], c * qt[1] - sn * pt[0]],
            [c * pt[0] + sn * qt[1], c * pt[1] + sn * qt[0]],
        )
    }

    /// Circular reference motion `q̃ = A(cos λ, sin λ)`, `p̃ = A(−sin λ, cos λ)` with `λ = ωt/√m`.
    pub fn reference_state(&self, amplitude: f64, t: f64) -> Result<PhasePoint> {
        if self.n != 2 {
            return Err(Error::Unsupported("the circular reference motion is defined for n = 2".into()));
        }
        let l = self.omega * t / self.m.sqrt();
        let s = self.scale();
        PhasePoint::new(
            vec![amplitude * l.cos() / s, amplitude * l.sin() / s],
            vec![-amplitude * l.sin() * s, amplitude * l.cos() * s],
        )
    }

    pub fn spec(&self) -> SystemSpec {
        let sys = self.system();
        let mut invariants = vec![sys.h.clone()];
        invariants.extend(self.charges(&su_basis(self.n)).unwrap_or_default());
        SystemSpec {
            name: format!("oscillator-{}", self.n),
            parameters: vec![
                Parameter::new("n", self.n as f64, "dimension"),
                Parameter::new("m", self.m, "mass"),
                Parameter::new("omega", self.omega, "frequency"),
            ],
            system: sys,
            invariants,
            lax: None,
            reference: if self.n == 2 {
                self.reference_state(1.0, 0.0).ok()
            } else {
                PhasePoint::new(vec![1.0; self.n], (0..self.n).map(|i| 0.1 * i as f64).collect()).ok()
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::poisson_bracket;

    #[test]
    fn basis_matches_two_dimensional_generators() {
        let b = su_basis(2);
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].get(0, 1), Cx::new(0.0, 1.0));
        assert_eq!(b[1].get(0, 1), Cx::real(1.0));
        assert_eq!(b[1].get(1, 0), Cx::real(-1.0));
        assert_eq!(b[2].get(0, 0), Cx::new(0.0, 1.0));
        assert_eq!(b[2].get(1, 1), Cx::new(0.0, -1.0));
        assert_eq!(su_basis(3).len(), 8);
    }

    #[test]
    fn charges_commute_with_h() {
        let o = Oscillator::new(3, 1.7, 0.9).unwrap();
        let x = PhasePoint::new(vec![0.3, -0.2, 1.0], vec![0.5, 0.1, -0.4]).unwrap();
        for c in o.charges(&su_basis(3)).unwrap() {
            assert!(poisson_bracket(&o.system().h, &c, &x).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn s_map_agrees_with_exponential() {
        let o = Oscillator::new(2, 2.0, 1.5).unwrap();
        let x = PhasePoint::new(vec![0.3, -0.7], vec![0.2, 0.9]).unwrap();
        let u = Oscillator::exponential(&su_basis(2)[0], 0.37);
        let y = o.apply_unitary(&u, &x).unwrap();
        let z = o.to_complex(&x);
        let (q, p) = Oscillator::s_map(0.37, [z[0].re, z[1].re], [z[0].im, z[1].im]);
        let w = o.to_complex(&y);
        for i in 0..2 {
            assert!((w[i].re - q[i]).abs() < 1e-14 && (w[i].im - p[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn reference_state_energy() {
        // |z|² = 2A², H = ω|z|²/(2√m)
        let o = Oscillator::new(2, 4.0, 3.0).unwrap();
        let x = o.reference_state(0.5, 0.8).unwrap();
        assert!((o.system().energy(&x) - 3.0 * 0.5 / (2.0 * 2.0)).abs() < 1e-14);
    }
}
