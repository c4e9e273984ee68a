use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::sampling::SINGULAR_MARGIN;

use super::{Parameter, SystemSpec};

/// Two fixed Coulomb centres at `z = ±a`: `H = p²/2m − k₁/r₁ − k₂/r₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoCenter {
    pub k1: f64,
    pub k2: f64,
    pub a: f64,
    pub m: f64,
}

fn radii<T: Scalar>(q: &[T], a: f64) -> (T, T) {
    let rho2 = q[0] * q[0] + q[1] * q[1];
    let z1 = q[2] - a;
    let z2 = q[2] + a;
    ((rho2 + z1 * z1).sqrt(), (rho2 + z2 * z2).sqrt())
}

struct Centres(TwoCenter);

impl FieldFn for Centres {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let (r1, r2) = radii(q, self.0.a);
        vec![-r1.recip() * self.0.k1 - r2.recip() * self.0.k2]
    }
}

#[derive(Clone, Copy)]
struct Separation(TwoCenter);

impl PhaseFn for Separation {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let c = self.0;
        let l = [q[1] * p[2] - q[2] * p[1], q[2] * p[0] - q[0] * p[2], q[0] * p[1] - q[1] * p[0]];
        let (r1, r2) = radii(q, c.a);
        let l2 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
        let z = q[2];
        l2 + p[2] * p[2] * (c.a * c.a) - (z / r1 * c.k1 - z / r2 * c.k2) * (2.0 * c.a * c.m)
    }
}

struct AxialMomentum;

impl PhaseFn for AxialMomentum {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        q[0] * p[1] - q[1] * p[0]
    }
}

impl TwoCenter {
    pub fn new(k1: f64, k2: f64, a: f64, m: f64) -> Result<Self> {
        if !(a > 0.0) || !(m > 0.0) || !k1.is_finite() || !k2.is_finite() {
            return Err(Error::Config(format!("two-centre problem needs a > 0, m > 0, got a = {a}, m = {m}")));
        }
        Ok(Self { k1, k2, a, m })
    }

    pub fn system(&self) -> HamiltonianSystem {
        let d = NaturalDecomposition::new(MetricField::flat(3), self.m).with_potential(Centres(*self));
        let a = self.a;
        HamiltonianSystem::natural("two-center", d).with_domain(move |y| {
            let (r1, r2) = radii(&y[..3], a);
            r1 > SINGULAR_MARGIN && r2 > SINGULAR_MARGIN
        })
    }

    /// Angular momentum about the axis through both centres.
    pub fn axial_momentum(&self) -> Observable {
        Observable::new("L3", Degree::Poly(1), 3, AxialMomentum)
    }

    /// `K = L² + a²p_z² − 2am(k₁z/r₁ − k₂z/r₂)`.
    pub fn separation_constant(&self) -> Observable {
        Observable::new("K", Degree::Poly(2), 3, Separation(*self))
    }

    pub fn spec(&self) -> SystemSpec {
        let sys = self.system();
        SystemSpec {
            name: "two-center".into(),
            parameters: vec![
                Parameter::new("k1", self.k1, "coupling"),
                Parameter::new("k2", self.k2, "coupling"),
                Parameter::new("a", self.a, "half separation"),
                Parameter::new("m", self.m, "mass"),
            ],
            invariants: vec![sys.h.clone(), self.axial_momentum(), self.separation_constant()],
            system: sys,
            lax: None,
            reference: PhasePoint::new(vec![1.1, 0.2, 0.3], vec![0.1, 0.7, -0.2]).ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::poisson_bracket;

    #[test]
    fn brackets_vanish_at_a_point() {
        let tc = TwoCenter::new(1.0, 0.6, 0.5, 1.2).unwrap();
        let h = tc.system().h;
        let x = PhasePoint::new(vec![0.4, -0.9, 0.3], vec![0.2, 0.5, -0.1]).unwrap();
        for (f, g) in [(&h, &tc.axial_momentum()), (&h, &tc.separation_constant()), (&tc.axial_momentum(), &tc.separation_constant())] {
            assert!(poisson_bracket(f, g, &x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn bad_parameters() {
        assert!(TwoCenter::new(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(TwoCenter::new(1.0, 1.0, 1.0, -1.0).is_err());
    }
}
