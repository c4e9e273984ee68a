use std::sync::Arc;

use log::warn;

use crate::autodiff::{DynField, FieldFn, Scalar};
use crate::dynamics::{
    conservation_drift, Degree, HamiltonianSystem, NaturalDecomposition, Observable, PhaseFn, PhasePoint, Trajectory,
};
use crate::error::{Error, Result};
use crate::geometry::{MetricField, Polarization, Signature, TensorField};
use crate::lax::LaxPair;
use crate::sampling::{CoordBox, Sampler};
use crate::systems::{Toda, TodaLax};

/// Smallest `c_i V_i` kept inside the lifted domain.
pub const POTENTIAL_FLOOR: f64 = 1e-6;

#[derive(Clone)]
struct Terms {
    metric: MetricField,
    mass: f64,
    couplings: Arc<Vec<f64>>,
    potentials: Arc<Vec<DynField>>,
}

impl Terms {
    fn base_dim(&self) -> usize {
        self.metric.dim
    }

    fn weights<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.couplings.iter().zip(self.potentials.iter()).map(|(&c, v)| v.eval(x)[0] * c).collect()
    }
}

/// `ĝ = g ⊕ diag(1/(2m c_i V_i))` in coordinates `(x, y_1, …)`.
struct LiftedMetric(Terms);

impl FieldFn for LiftedMetric {
    fn eval<T: Scalar>(&self, z: &[T]) -> Vec<T> {
        let n = self.0.base_dim();
        let big = n + self.0.couplings.len();
        let x = &z[..n];
        let g = self.0.metric.g(x);
        let mut out = vec![T::zero(); big * big];
        for mu in 0..n {
            for nu in 0..n {
                out[mu * big + nu] = g[(mu, nu)];
            }
        }
        for (i, w) in self.0.weights(x).into_iter().enumerate() {
            let k = n + i;
            out[k * big + k] = (w * (2.0 * self.0.mass)).recip();
        }
        out
    }
}

/// `Ĥ = (1/2m) g^{μν} p_μ p_ν + Σ p_{y_i}² c_i V_i`.
struct LiftedH(Terms);

impl PhaseFn for LiftedH {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let n = self.0.base_dim();
        let x = &q[..n];
        let kinetic = match self.0.metric.inverse(x) {
            Ok(ginv) => crate::dynamics::quadratic_form(&ginv, &p[..n]),
            Err(_) => T::cst(f64::NAN),
        };
        let mut h = kinetic / (2.0 * self.0.mass);
        for (i, w) in self.0.weights(x).into_iter().enumerate() {
            h += p[n + i] * p[n + i] * w;
        }
        h
    }
}

/// Geodesic lift of `½ g^{μν}p_μp_ν/m + Σ c_i V_i` with one extra cyclic coordinate per term.
#[derive(Clone)]
pub struct ScalarLift {
    terms: Terms,
    metric: MetricField,
    system: HamiltonianSystem,
}

impl std::fmt::Debug for ScalarLift {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarLift").field("metric", &self.metric.name).field("terms", &self.terms.couplings.len()).finish()
    }
}

/// Lift with a single extra dimension, `ĝ = g + dy²/(2mV)`.
pub fn scalar_lift(base: &HamiltonianSystem) -> Result<ScalarLift> {
    let d = base.decomposition()?;
    if d.vector_potential.is_some() {
        return Err(Error::Unsupported(format!("{} has a vector potential; use the null lift", base.name)));
    }
    let v = d.potential.clone().ok_or_else(|| Error::Unsupported(format!("{} has no potential to lift", base.name)))?;
    generalized_lift(&d.metric, d.mass, vec![(1.0, v)])
}

/// Lift with one extra dimension per term, `ĝ = g + Σ dy_i²/(2m c_i V_i)`.
pub fn generalized_lift(metric: &MetricField, mass: f64, terms: Vec<(f64, DynField)>) -> Result<ScalarLift> {
    if terms.is_empty() {
        return Err(Error::Config("a scalar lift needs at least one potential term".into()));
    }
    if !(mass > 0.0) {
        return Err(Error::Config(format!("mass must be positive, got {mass}")));
    }
    if let Some(c) = terms.iter().map(|(c, _)| *c).find(|c| !c.is_finite() || *c == 0.0) {
        return Err(Error::Config(format!("lift couplings must be finite and nonzero, got {c}")));
    }
    let (couplings, potentials): (Vec<f64>, Vec<DynField>) = terms.into_iter().unzip();
    let t = Terms { metric: metric.clone(), mass, couplings: Arc::new(couplings), potentials: Arc::new(potentials) };
    let n = metric.dim;
    let big = n + t.couplings.len();

    let positive = {
        let t = t.clone();
        move |x: &[f64]| t.weights(x).iter().all(|&w| w > POTENTIAL_FLOOR)
    };
    let locus = metric.singular_locus().cloned();
    let lifted_metric = {
        let positive = positive.clone();
        MetricField::new(format!("{} scalar lift", metric.name), big, Signature::Riemannian, LiftedMetric(t.clone()))
            .with_singular_locus(move |z| !positive(&z[..n]) || locus.as_ref().is_some_and(|l| l(&z[..n])))
    };
    let h = Observable::new("H_lift", Degree::Poly(2), big, LiftedH(t.clone()));
    // Ĥ stays regular as c_i V_i → 0, only ĝ degenerates; the floor guards the geometry
    let base_locus = metric.singular_locus().cloned();
    let system = HamiltonianSystem::new(format!("{} scalar lift", metric.name), h)
        .with_decomposition(NaturalDecomposition::new(lifted_metric.clone(), mass))
        .with_domain(move |y| !base_locus.as_ref().is_some_and(|l| l(&y[..n])));
    Ok(ScalarLift { terms: t, metric: lifted_metric, system })
}

impl ScalarLift {
    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
    }

    pub fn base_dim(&self) -> usize {
        self.terms.base_dim()
    }

    pub fn extra_dims(&self) -> usize {
        self.terms.couplings.len()
    }

    /// Base system with couplings `c_i p_{y_i}²`, the dynamics the lift reproduces.
    pub fn effective_base(&self, p_y: &[f64]) -> Result<HamiltonianSystem> {
        if p_y.len() != self.extra_dims() {
            return Err(Error::Config(format!("expected {} extra momenta, got {}", self.extra_dims(), p_y.len())));
        }
        let mut t = self.terms.clone();
        t.couplings = Arc::new(t.couplings.iter().zip(p_y).map(|(c, p)| c * p * p).collect());
        let h = Observable::new("H", Degree::Poly(2), self.base_dim(), EffectiveH(t));
        Ok(HamiltonianSystem::new("effective base", h))
    }

    /// Whether `c_i V_i > POTENTIAL_FLOOR` on the box.
    ///
    /// Samples that fail restrict the domain and raise a warning; if none
    /// pass, the lift is empty on the box and an error is returned.
    pub fn check_domain(&self, bx: &CoordBox, sampler: &mut Sampler, count: usize) -> Result<bool> {
        if bx.dim() != self.base_dim() {
            return Err(Error::Config(format!("box has dimension {}, base has {}", bx.dim(), self.base_dim())));
        }
        let pts = sampler.points(bx, count, |_| true)?;
        let good = pts.iter().filter(|x| self.terms.weights(x).iter().all(|&w| w > POTENTIAL_FLOOR)).count();
        if good == 0 {
            return Err(Error::Degenerate(format!("lift potential is at or below {POTENTIAL_FLOOR:e} throughout the box")));
        }
        if good < pts.len() {
            warn!(
                "lift potential falls below {POTENTIAL_FLOOR:e} at {} of {} samples; domain restricted to c_i V_i > {POTENTIAL_FLOOR:e}",
                pts.len() - good,
                pts.len()
            );
            return Ok(false);
        }
        Ok(true)
    }

    /// Lifted state with `y = 0` and the given extra momenta.
    pub fn lift_state(&self, x: &PhasePoint, p_y: &[f64]) -> Result<PhasePoint> {
        if x.n() != self.base_dim() || p_y.len() != self.extra_dims() {
            return Err(Error::Config(format!(
                "lift expects {} base and {} extra momenta, got {} and {}",
                self.base_dim(),
                self.extra_dims(),
                x.n(),
                p_y.len()
            )));
        }
        let q = x.q.iter().copied().chain(std::iter::repeat_n(0.0, p_y.len())).collect();
        let p = x.p.iter().chain(p_y).copied().collect();
        PhasePoint::new(q, p)
    }

    pub fn project_state(&self, y: &PhasePoint) -> PhasePoint {
        let n = self.base_dim();
        PhasePoint { q: y.q[..n].to_vec(), p: y.p[..n].to_vec() }
    }

    /// Project a lifted trajectory, insisting that the cyclic momenta stay put.
    pub fn project(&self, traj: &Trajectory, tol: f64) -> Result<Trajectory> {
        let n = self.base_dim();
        let first = traj.states.first().ok_or_else(|| Error::Config("empty trajectory".into()))?;
        for (t, y) in traj.times.iter().zip(&traj.states) {
            let d = y.p[n..].iter().zip(&first.p[n..]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if d > tol {
                return Err(Error::Numerical(format!("extra momenta drifted by {d:e} at t = {t}")));
            }
        }
        let mut out = Trajectory {
            times: traj.times.clone(),
            states: traj.states.iter().map(|y| self.project_state(y)).collect(),
            method: traj.method,
            stats: traj.stats,
            energy_drift: Default::default(),
        };
        let base = self.effective_base(&first.p[n..])?;
        out.energy_drift = conservation_drift(&base.h, &out);
        Ok(out)
    }
}

struct EffectiveH(Terms);

impl PhaseFn for EffectiveH {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let kinetic = match self.0.metric.inverse(q) {
            Ok(ginv) => crate::dynamics::quadratic_form(&ginv, p),
            Err(_) => T::cst(f64::NAN),
        };
        let mut h = kinetic / (2.0 * self.0.mass);
        for w in self.0.weights(q) {
            h += w;
        }
        h
    }
}

struct Bond(usize);

impl FieldFn for Bond {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        vec![((q[self.0] - q[self.0 + 1]) * 2.0).exp()]
    }
}

/// Toda chain lifted with one extra dimension per bond, and its Lax pair
/// with bond couplings `g_i p_{y_i}`.
#[derive(Clone, Debug)]
pub struct LiftedToda {
    pub lift: ScalarLift,
    pub lax: LaxPair,
}

pub fn lift_toda(toda: &Toda) -> Result<LiftedToda> {
    let n = toda.n();
    let terms = toda.g.iter().enumerate().map(|(i, &g)| (g * g, DynField::new(Bond(i)))).collect();
    let lift = generalized_lift(&MetricField::flat(n), 1.0, terms)?;
    let dof = lift.metric.dim;
    let lax = LaxPair::new(format!("toda-{n} lift"), dof, n, false, TodaLax { g: Arc::new(toda.g.clone()), n, lifted: true });
    Ok(LiftedToda { lift, lax })
}

impl LiftedToda {
    /// `𝓘_i = (1/2^i) tr 𝓛^i`, homogeneous of degree `i` in all momenta.
    pub fn invariants(&self) -> Vec<Observable> {
        let n = self.lax.size;
        (1..=n).map(|i| self.lax.trace_observable(i, 0.5f64.powi(i as i32), format!("I{i}_lift"))).collect()
    }

    /// Upper-index Killing tensor of rank `i` read off from `𝓘_i` by polarisation.
    pub fn killing_tensor(&self, i: usize) -> Result<TensorField> {
        let inv = self.invariants();
        let f = inv.get(i.wrapping_sub(1)).ok_or_else(|| Error::InvalidIndex(format!("no invariant of degree {i}")))?;
        Ok(Polarization::new(self.lift.metric.dim, i)?.field(f, format!("K({i})")))
    }
}
