use std::sync::Arc;

use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{
    conservation_drift, Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint, Trajectory,
};
use crate::error::{Error, Result};
use crate::geometry::{MetricField, Position, Signature, Symmetry, TensorField};

use super::grade_by_scaling;

/// Tolerance on `p_v = m` and `Ĥ = 0` along a lifted trajectory.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Lifted metric in coordinates `(v, t, x^μ)`:
/// `ĝ_vt = 1`, `ĝ_tt = −2V/m`, `ĝ_tμ = (e/m)A_μ`, `ĝ_μν = g_μν`.
struct LiftedMetric(NaturalDecomposition);

impl FieldFn for LiftedMetric {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let d = &self.0;
        let n = d.dim();
        let big = n + 2;
        let x = &y[2..];
        let g = d.metric.g(x);
        let a = d.vector_potential(x);
        let mut out = vec![T::zero(); big * big];
        out[1] = T::one();
        out[big] = T::one();
        out[big + 1] = d.potential(x) * (-2.0 / d.mass);
        for mu in 0..n {
            let c = a[mu] * (d.charge / d.mass);
            out[big + 2 + mu] = c;
            out[(2 + mu) * big + 1] = c;
            for nu in 0..n {
                out[(2 + mu) * big + 2 + nu] = g[(mu, nu)];
            }
        }
        out
    }
}

/// `Ĥ = (1/2m) g^{μν} π_μ π_ν + p_v p_t/m + V p_v²/m²` with `π = p − (e/m) A p_v`.
struct LiftedH(NaturalDecomposition);

impl PhaseFn for LiftedH {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let d = &self.0;
        let x = &q[2..];
        let (pv, pt) = (p[0], p[1]);
        let a = d.vector_potential(x);
        let pi: Vec<T> = p[2..].iter().zip(&a).map(|(&pm, &am)| pm - am * pv * (d.charge / d.mass)).collect();
        let kinetic = match d.metric.inverse(x) {
            Ok(ginv) => crate::dynamics::quadratic_form(&ginv, &pi),
            Err(_) => T::cst(f64::NAN),
        };
        kinetic / (2.0 * d.mass) + pv * pt / d.mass + d.potential(x) * pv * pv / (d.mass * d.mass)
    }
}

/// `K̂ = Σ_i (p_v/m)^{k−i} K_i` on the lifted phase space.
struct LiftedObservable {
    parts: Arc<Vec<(u32, Observable)>>,
    degree: u32,
    mass: f64,
}

impl PhaseFn for LiftedObservable {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let s = p[0] / self.mass;
        let mut out = T::zero();
        for (i, part) in self.parts.iter() {
            out += part.eval_qp(&q[2..], &p[2..]) * s.powi((self.degree - i) as i32);
        }
        out
    }
}

struct NullVector(usize);

impl FieldFn for NullVector {
    fn eval<T: Scalar>(&self, _y: &[T]) -> Vec<T> {
        let mut v = vec![T::zero(); self.0];
        v[0] = T::one();
        v
    }
}

/// Null lift of a natural system to a Lorentzian metric in two more dimensions.
#[derive(Clone, Debug)]
pub struct NullLift {
    base: HamiltonianSystem,
    decomposition: NaturalDecomposition,
    metric: MetricField,
    system: HamiltonianSystem,
}

pub fn null_lift(base: &HamiltonianSystem) -> Result<NullLift> {
    let d = base.decomposition()?.clone();
    let n = d.dim();
    let mut metric = MetricField::new(format!("{} null lift", d.metric.name), n + 2, Signature::Lorentzian, LiftedMetric(d.clone()));
    if let Some(locus) = d.metric.singular_locus().cloned() {
        metric = metric.with_singular_locus(move |y| locus(&y[2..]));
    }
    let h = Observable::new("H_lift", Degree::Poly(2), n + 2, LiftedH(d.clone()));
    let mut system = HamiltonianSystem::new(format!("{} null lift", base.name), h)
        .with_decomposition(NaturalDecomposition::new(metric.clone(), d.mass));
    if let Some(dom) = base.domain().cloned() {
        system = system.with_domain(move |y| {
            let big = n + 2;
            let flat: Vec<f64> = y[2..big].iter().chain(&y[big + 2..]).copied().collect();
            dom(&flat)
        });
    }
    Ok(NullLift { base: base.clone(), decomposition: d, metric, system })
}

impl NullLift {
    pub fn base(&self) -> &HamiltonianSystem {
        &self.base
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
    }

    pub fn mass(&self) -> f64 {
        self.decomposition.mass
    }

    /// `∂_v`, upper index.
    pub fn null_vector(&self) -> TensorField {
        let n = self.metric.dim;
        TensorField::new("d_v", n, 1, Symmetry::None, Position::Upper, NullVector(n))
    }

    /// Lifted state with `v = t = 0`, `p_v = m` and `p_t = −H(x₀)`.
    pub fn initial_data(&self, x0: &PhasePoint) -> Result<PhasePoint> {
        if x0.n() != self.base.n {
            return Err(Error::Config(format!("state has {} degrees of freedom, {} has {}", x0.n(), self.base.name, self.base.n)));
        }
        let h = self.base.energy(x0);
        let q = [0.0, 0.0].iter().chain(&x0.q).copied().collect();
        let p = [self.mass(), -h].iter().chain(&x0.p).copied().collect();
        PhasePoint::new(q, p)
    }

    /// Base state of a lifted one.
    pub fn project_state(&self, y: &PhasePoint) -> PhasePoint {
        PhasePoint { q: y.q[2..].to_vec(), p: y.p[2..].to_vec() }
    }

    /// Check the null constraint along a lifted trajectory and read off the
    /// base trajectory, timed by the `t` coordinate.
    pub fn project(&self, traj: &Trajectory) -> Result<Trajectory> {
        let m = self.mass();
        let first = traj.states.first().ok_or_else(|| Error::Config("empty trajectory".into()))?;
        let h0 = self.system.h.value(first);
        if h0.abs() > CONSTRAINT_TOL * self.base.energy(&self.project_state(first)).abs().max(1.0) {
            return Err(Error::Numerical(format!("lifted trajectory starts off the null surface, Ĥ = {h0:e}")));
        }
        for (lambda, y) in traj.times.iter().zip(&traj.states) {
            let dv = (y.p[0] - m).abs();
            if dv > CONSTRAINT_TOL * m.max(1.0) {
                return Err(Error::Numerical(format!("p_v drifted by {dv:e} at λ = {lambda}, consistency lost")));
            }
        }
        let times: Vec<f64> = traj.states.iter().map(|y| y.q[1]).collect();
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Numerical("the t coordinate is not monotone along the lifted trajectory".into()));
        }
        let states: Vec<PhasePoint> = traj.states.iter().map(|y| self.project_state(y)).collect();
        let mut out = Trajectory {
            times,
            states,
            method: traj.method,
            stats: traj.stats,
            energy_drift: Default::default(),
        };
        out.energy_drift = conservation_drift(&self.base.h, &out);
        Ok(out)
    }

    /// Homogenise a graded invariant: `K̂ = Σ (p_v/m)^{k−i} K_i`.
    pub fn lift_observable(&self, k: &Observable) -> Result<Observable> {
        let parts = k.grading().ok_or_else(|| {
            Error::Config(format!("{} has no momentum grading; attach one or use lift_polynomial", k.name))
        })?;
        if k.n() != self.base.n {
            return Err(Error::Type(format!("{} acts on {} degrees of freedom, base has {}", k.name, k.n(), self.base.n)));
        }
        let degree = parts.iter().map(|(i, _)| *i).max().unwrap_or(0);
        Ok(Observable::new(
            format!("{}_lift", k.name),
            Degree::Poly(degree),
            self.base.n + 2,
            LiftedObservable { parts: Arc::new(parts.to_vec()), degree, mass: self.mass() },
        ))
    }

    /// Grade a polynomial invariant by momentum scaling and lift it.
    pub fn lift_polynomial(&self, k: &Observable) -> Result<Observable> {
        match k.degree {
            Degree::Poly(d) => self.lift_observable(&grade_by_scaling(k, d)?),
            Degree::NonPolynomial => Err(Error::Unsupported(format!("{} is not polynomial in the momenta", k.name))),
        }
    }
}
