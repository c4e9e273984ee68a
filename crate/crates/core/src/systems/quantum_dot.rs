//! Relative motion of two electrons in an axially symmetric quantum dot.

use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::{MetricField, Signature};
use crate::sampling::SINGULAR_MARGIN;

use super::{Parameter, SystemSpec};

/// Coordinates `(ρ, z, φ)`, metric `diag(1, 1, ρ²)`, unit mass, vector potential
/// `eA_φ = ω_L ρ²` and `V = ½(ω₀²ρ² + ω_z²z²) − a/√(ρ² + z²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantumDot {
    pub omega0: f64,
    pub omega_z: f64,
    pub omega_l: f64,
    pub a: f64,
}

struct Cylindrical;

impl FieldFn for Cylindrical {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        vec![T::one(), T::zero(), T::zero(), T::zero(), T::one(), T::zero(), T::zero(), T::zero(), x[0] * x[0]]
    }
}

struct Confining(QuantumDot);

impl FieldFn for Confining {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let d = self.0;
        let (rho, z) = (x[0], x[1]);
        let r = (rho * rho + z * z).sqrt();
        vec![(rho * rho * (d.omega0 * d.omega0) + z * z * (d.omega_z * d.omega_z)) * 0.5 - r.recip() * d.a]
    }
}

struct Larmor(f64);

impl FieldFn for Larmor {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        vec![T::zero(), T::zero(), x[0] * x[0] * self.0]
    }
}

#[derive(Clone, Copy)]
enum Q {
    Lz,
    K,
    C,
}

#[derive(Clone, Copy)]
struct DotFn {
    dot: QuantumDot,
    q: Q,
}

impl DotFn {
    fn k<T: Scalar>(&self, rho: T, z: T, pr: T, pz: T, pf: T) -> T {
        let d = self.dot;
        let r = (rho * rho + z * z).sqrt();
        z * pr * pr - rho * pr * pz + z / (rho * rho) * pf * pf + z * pf * (2.0 * d.omega_l)
            - rho * rho * z * (d.omega0 * d.omega0)
            - z / r * d.a
    }

    fn c<T: Scalar>(&self, rho: T, z: T, pr: T, pz: T, pf: T) -> T {
        let d = self.dot;
        let (w0, wz, wl, a) = (d.omega0 * d.omega0, d.omega_z * d.omega_z, d.omega_l, d.a);
        let wl2 = wl * wl;
        let r2 = rho * rho;
        let z2 = z * z;
        let s = (z2 + r2).sqrt();
        let (pr2, pz2, pf2) = (pr * pr, pz * pz, pf * pf);
        let third = 1.0 / 3.0;
        let c4 = (w0 - wz * 4.0 + wl2) * third;

        let mut c = r2 * pz2 * pz2 - rho * z * pr * pz2 * pz * 2.0 + z2 * pr2 * pz2 + pf2 * pf2 / r2 + pr2 * pf2;
        c += (z2 / r2 + 2.0) * pz2 * pf2;
        c += pf * (r2 * pr2 + (r2 * 2.0 + z2) * pz2) * (2.0 * wl);
        c += (z2 * r2 * (2.0 * wz - w0) + r2 * r2 * (2.0 * wl2) - r2 / s * (2.0 * a)) * pz2;
        c += (z2 * z * rho * ((2.0 * w0 - 5.0 * wz + 2.0 * wl2) * 2.0 * third) + z * rho / s * (2.0 * a)) * pz * pr;
        c += (r2 * r2 * wl2 - z2 * z2 * c4) * pr2;
        c += (z2 * (2.0 * wz) + r2 * (w0 - 5.0 * wl2) - z2 * z2 / r2 * c4 - s.recip() * (2.0 * a)) * pf2;
        c -= pf * (z2 * z2 * c4 - z2 * r2 * (2.0 * wz) + r2 * r2 * (3.0 * wl2 - w0) + r2 / s * (2.0 * a)) * (2.0 * wl);
        c += z2 * z2 * r2 * (wz * wz) + z2 * r2 * r2 * (2.0 * wz * wl2) - r2 * r2 * r2 * (wl2 * (3.0 * wl2 - 4.0 * wz));
        c += (z2 * r2 * wz - r2 * r2 * wl2) / s * (2.0 * a);
        c - (z2 - r2) / (z2 + r2) * (a * a * 0.5)
    }
}

impl PhaseFn for DotFn {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let (rho, z) = (q[0], q[1]);
        let wl = self.dot.omega_l;
        // covariant momenta Π = p − eA
        let (pr, pz, pf) = (p[0], p[1], p[2] - rho * rho * wl);
        match self.q {
            Q::Lz => pf + rho * rho * wl,
            Q::K => self.k(rho, z, pr, pz, pf),
            Q::C => self.c(rho, z, pr, pz, pf),
        }
    }
}

impl QuantumDot {
    pub fn new(omega0: f64, omega_z: f64, omega_l: f64, a: f64) -> Result<Self> {
        let all = [omega0, omega_z, omega_l, a];
        if all.iter().any(|v| !v.is_finite()) || omega0 * omega0 + omega_l * omega_l == 0.0 {
            return Err(Error::Config(format!("quantum dot needs finite parameters and ω₀² + ω_L² > 0, got {all:?}")));
        }
        Ok(Self { omega0, omega_z, omega_l, a })
    }

    /// Dot with `ω_z` chosen so that `τ` takes the requested value.
    pub fn with_tau(omega0: f64, omega_l: f64, a: f64, tau: f64) -> Result<Self> {
        Self::new(omega0, tau * (omega0 * omega0 + omega_l * omega_l).sqrt(), omega_l, a)
    }

    /// `τ = ω_z / √(ω₀² + ω_L²)`.
    pub fn tau(&self) -> f64 {
        self.omega_z / (self.omega0 * self.omega0 + self.omega_l * self.omega_l).sqrt()
    }

    pub fn metric() -> MetricField {
        MetricField::new("cylindrical", 3, Signature::Riemannian, Cylindrical).with_singular_locus(|x| x[0].abs() < SINGULAR_MARGIN)
    }

    pub fn decomposition(&self) -> NaturalDecomposition {
        NaturalDecomposition::new(Self::metric(), 1.0)
            .with_potential(Confining(*self))
            .with_vector_potential(1.0, Larmor(self.omega_l))
    }

    pub fn system(&self) -> HamiltonianSystem {
        HamiltonianSystem::natural("quantum-dot", self.decomposition()).with_domain(|y| y[0] > SINGULAR_MARGIN)
    }

    fn obs(&self, name: &str, degree: Degree, q: Q) -> Observable {
        Observable::new(name, degree, 3, DotFn { dot: *self, q })
    }

    /// `L_z = π_φ + ω_L ρ²`, conserved for every `τ`.
    pub fn lz(&self) -> Observable {
        self.obs("Lz", Degree::Poly(1), Q::Lz)
    }

    /// Quadratic constant, conserved at `τ = 2`.
    pub fn k(&self) -> Observable {
        self.obs("K", Degree::Poly(2), Q::K)
    }

    /// Quartic constant, conserved at `τ = 1/2`.
    pub fn c(&self) -> Observable {
        self.obs("C", Degree::Poly(4), Q::C)
    }

    pub fn spec(&self) -> SystemSpec {
        let sys = self.system();
        SystemSpec {
            name: "quantum-dot".into(),
            parameters: vec![
                Parameter::new("omega0", self.omega0, "frequency"),
                Parameter::new("omega_z", self.omega_z, "frequency"),
                Parameter::new("omega_l", self.omega_l, "Larmor frequency"),
                Parameter::new("a", self.a, "Coulomb coupling"),
                Parameter::new("tau", self.tau(), "frequency ratio"),
            ],
            invariants: vec![sys.h.clone(), self.lz(), self.k(), self.c()],
            system: sys,
            lax: None,
            reference: PhasePoint::new(vec![0.8, 0.5, 0.0], vec![0.3, -0.2, 0.6]).ok(),
        }
    }
}
