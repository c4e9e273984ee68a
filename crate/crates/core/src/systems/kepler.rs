use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};
use crate::geometry::{MetricField, Signature};
use crate::sampling::SINGULAR_MARGIN;

use super::{Parameter, SystemSpec};

/// `H = p²/2m − k/r` in ℝ³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kepler {
    pub m: f64,
    pub k: f64,
}

#[derive(Clone, Copy)]
enum Q {
    L(usize),
    A(usize),
    /// `p × L`
    A2(usize),
    /// `−mk r̂`
    A0(usize),
    B(usize),
}

#[derive(Clone, Copy)]
struct KeplerFn {
    m: f64,
    k: f64,
    q: Q,
}

fn cross<T: Scalar>(a: &[T], b: &[T]) -> [T; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl KeplerFn {
    fn runge_lenz<T: Scalar>(&self, q: &[T], p: &[T]) -> [T; 3] {
        let l = cross(q, p);
        let pl = cross(p, &l);
        let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let c = self.m * self.k;
        [pl[0] - q[0] / r * c, pl[1] - q[1] / r * c, pl[2] - q[2] / r * c]
    }
}

impl PhaseFn for KeplerFn {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        match self.q {
            Q::L(i) => cross(q, p)[i],
            Q::A(i) => self.runge_lenz(q, p)[i],
            Q::A2(i) => cross(p, &cross(q, p))[i],
            Q::A0(i) => {
                let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                -q[i] / r * (self.m * self.k)
            }
            Q::B(i) => {
                let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
                let e = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / (2.0 * self.m) - r.recip() * self.k;
                self.runge_lenz(q, p)[i] / (e.abs() * (2.0 * self.m)).sqrt()
            }
        }
    }
}

struct Coulomb(f64);

impl FieldFn for Coulomb {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        let r2 = q.iter().fold(T::zero(), |s, &x| s + x * x);
        vec![-r2.sqrt().recip() * self.0]
    }
}

/// `−k/r` in spherical coordinates `(r, θ, φ)`.
struct RadialCoulomb(f64);

impl FieldFn for RadialCoulomb {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        vec![-q[0].recip() * self.0]
    }
}

struct SphericalFlat;

impl FieldFn for SphericalFlat {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let r2 = x[0] * x[0];
        let s = x[1].sin();
        let z = T::zero();
        vec![T::one(), z, z, z, r2, z, z, z, r2 * s * s]
    }
}

impl Kepler {
    pub fn new(m: f64, k: f64) -> Result<Self> {
        if !(m > 0.0) || !k.is_finite() {
            return Err(Error::Config(format!("Kepler needs m > 0 and finite k, got m = {m}, k = {k}")));
        }
        Ok(Self { m, k })
    }

    fn obs(&self, name: String, degree: Degree, q: Q) -> Observable {
        Observable::new(name, degree, 3, KeplerFn { m: self.m, k: self.k, q })
    }

    pub fn system(&self) -> HamiltonianSystem {
        let d = NaturalDecomposition::new(MetricField::flat(3), self.m).with_potential(Coulomb(self.k));
        HamiltonianSystem::natural("kepler", d).with_domain(|y| y[..3].iter().map(|v| v * v).sum::<f64>().sqrt() > SINGULAR_MARGIN)
    }

    /// `L = r × p`.
    pub fn angular_momentum(&self) -> [Observable; 3] {
        [0, 1, 2].map(|i| self.obs(format!("L{}", i + 1), Degree::Poly(1), Q::L(i)))
    }

    /// `A = p × L − mk r̂`, graded into its quadratic and momentum-free parts.
    pub fn runge_lenz(&self) -> [Observable; 3] {
        [0, 1, 2].map(|i| {
            self.obs(format!("A{}", i + 1), Degree::Poly(2), Q::A(i)).with_grading(vec![
                (2, self.obs(format!("A{}[2]", i + 1), Degree::Poly(2), Q::A2(i))),
                (0, self.obs(format!("A{}[0]", i + 1), Degree::Poly(0), Q::A0(i))),
            ])
        })
    }

    /// `B = A / √(2m|E|)`, closing with `L` on so(4) for `E < 0` and so(1,3) for `E > 0`.
    pub fn scaled_runge_lenz(&self) -> [Observable; 3] {
        [0, 1, 2].map(|i| self.obs(format!("B{}", i + 1), Degree::NonPolynomial, Q::B(i)))
    }

    /// The same problem in spherical coordinates `(r, θ, φ)`.
    pub fn spherical_system(&self) -> HamiltonianSystem {
        let metric = MetricField::new("spherical flat", 3, Signature::Riemannian, SphericalFlat)
            .with_singular_locus(|x| x[0].abs() < SINGULAR_MARGIN || x[1].sin().abs() < SINGULAR_MARGIN);
        let d = NaturalDecomposition::new(metric, self.m).with_potential(RadialCoulomb(self.k));
        HamiltonianSystem::natural("kepler spherical", d)
            .with_domain(|y| y[0] > SINGULAR_MARGIN && y[1].sin().abs() > SINGULAR_MARGIN)
    }

    /// Largest deviation of the `{L, B}` brackets at `x` from
    /// `{L_i, L_j} = ε_ijk L_k`, `{L_i, B_j} = ε_ijk B_k`, `{B_i, B_j} = −sgn(E) ε_ijk L_k`.
    pub fn algebra_residual(&self, x: &PhasePoint) -> Result<f64> {
        let e = self.system().energy(x);
        if e == 0.0 {
            return Err(Error::Degenerate("B is undefined at zero energy".into()));
        }
        let mut obs = self.angular_momentum().to_vec();
        obs.extend(self.scaled_runge_lenz());
        let table = crate::dynamics::bracket_table(&obs, std::slice::from_ref(x))?.remove(0);
        let vals: Vec<f64> = obs.iter().map(|o| o.value(x)).collect();
        let sgn = e.signum();
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            // {X_i, Y_j} with ε_ijk = +1; the antisymmetric partners are covered by the table itself
            worst = worst.max((table[(i, j)] - vals[k]).abs());
            worst = worst.max((table[(i, 3 + j)] - vals[3 + k]).abs());
            worst = worst.max((table[(3 + i, j)] - vals[3 + k]).abs());
            worst = worst.max((table[(3 + i, 3 + j)] + sgn * vals[k]).abs());
            worst = worst.max(table[(i, 3 + i)].abs());
        }
        Ok(worst)
    }

    pub fn spec(&self) -> SystemSpec {
        let mut invariants = vec![];
        invariants.extend(self.angular_momentum());
        invariants.extend(self.runge_lenz());
        let sys = self.system();
        invariants.insert(0, sys.h.clone());
        SystemSpec {
            name: "kepler".into(),
            parameters: vec![Parameter::new("m", self.m, "mass"), Parameter::new("k", self.k, "coupling")],
            system: sys,
            invariants,
            lax: None,
            reference: PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0, 0.8, 0.3]).ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::poisson_bracket;

    #[test]
    fn circular_orbit_has_no_runge_lenz_vector() {
        let kp = Kepler::new(1.0, 1.0).unwrap();
        let x = PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap();
        for a in kp.runge_lenz() {
            assert!(a.value(&x).abs() < 1e-15);
        }
        assert_eq!(kp.system().energy(&x), -0.5);
    }

    #[test]
    fn angular_momentum_bracket_example() {
        let kp = Kepler::new(1.0, 1.0).unwrap();
        let [l1, l2, _] = kp.angular_momentum();
        let x = PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert!((poisson_bracket(&l1, &l2, &x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn algebra_residual_small_on_both_sides_of_zero_energy() {
        let kp = Kepler::new(1.0, 1.0).unwrap();
        let bound = PhasePoint::new(vec![1.0, 0.2, 0.0], vec![0.1, 0.8, 0.3]).unwrap();
        let free = PhasePoint::new(vec![1.0, 0.2, 0.0], vec![0.1, 1.8, 0.3]).unwrap();
        assert!(kp.system().energy(&bound) < 0.0 && kp.system().energy(&free) > 0.0);
        assert!(kp.algebra_residual(&bound).unwrap() < 1e-12);
        assert!(kp.algebra_residual(&free).unwrap() < 1e-12);
    }

    #[test]
    fn runge_lenz_magnitude_identity() {
        // |A|² = m²k² + 2mE|L|²
        let kp = Kepler::new(1.5, 0.7).unwrap();
        let x = PhasePoint::new(vec![0.3, -1.1, 0.4], vec![0.2, 0.5, -0.6]).unwrap();
        let a2: f64 = kp.runge_lenz().iter().map(|a| a.value(&x).powi(2)).sum();
        let l2: f64 = kp.angular_momentum().iter().map(|l| l.value(&x).powi(2)).sum();
        let e = kp.system().energy(&x);
        assert!((a2 - (1.5f64 * 0.7).powi(2) - 2.0 * 1.5 * e * l2).abs() < 1e-12);
    }

    #[test]
    fn spherical_and_cartesian_energies_agree() {
        let kp = Kepler::new(1.0, 2.0).unwrap();
        let (r, th, ph) = (1.3f64, 0.9f64, 0.4f64);
        let (pr, pth, pph) = (0.2, -0.3, 0.5);
        let sph = PhasePoint::new(vec![r, th, ph], vec![pr, pth, pph]).unwrap();
        let e_sph = kp.spherical_system().energy(&sph);
        let v2 = pr * pr + (pth / r).powi(2) + (pph / (r * th.sin())).powi(2);
        assert!((e_sph - (0.5 * v2 - 2.0 / r)).abs() < 1e-14);
        assert!(Kepler::new(0.0, 1.0).is_err());
    }
}
