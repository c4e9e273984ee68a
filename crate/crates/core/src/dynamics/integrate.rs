use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::autodiff::seed;
use crate::error::{Error, Result};

use super::dop853_tableau::{A, B, C, E3, E5, STAGES};
use super::drift::{conservation_drift, Drift};
use super::phase::{Observable, PhasePoint};
use super::system::HamiltonianSystem;

/// Right-hand side `ẏ = f(t, y)` of a first-order system.
pub trait OdeRhs {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64]) -> Vec<f64>;
    fn in_domain(&self, _y: &[f64]) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    /// Störmer–Verlet, separable `H` only.
    Verlet { step: f64 },
    /// Two-stage Gauss–Legendre collocation, symplectic for any `H`.
    Gauss { step: f64 },
    /// Adaptive Dormand–Prince 8(5,3).
    Dop853 { rtol: f64, atol: f64 },
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Verlet { .. } => "verlet",
            Method::Gauss { .. } => "gauss2",
            Method::Dop853 { .. } => "dop853",
        }
    }
}

/// Which states to keep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    EveryStep,
    /// `k` equal intervals, endpoints hit exactly.
    Uniform(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub max_steps: usize,
    pub sampling: Sampling,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::dop853(1e-10, 1e-12)
    }
}

impl IntegratorConfig {
    pub fn dop853(rtol: f64, atol: f64) -> Self {
        Self { method: Method::Dop853 { rtol, atol }, max_steps: 5_000_000, sampling: Sampling::EveryStep }
    }

    pub fn verlet(step: f64) -> Self {
        Self { method: Method::Verlet { step }, max_steps: usize::MAX, sampling: Sampling::EveryStep }
    }

    pub fn gauss(step: f64) -> Self {
        Self { method: Method::Gauss { step }, max_steps: usize::MAX, sampling: Sampling::EveryStep }
    }

    pub fn sampled(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.method {
            Method::Verlet { step } | Method::Gauss { step } => step > 0.0 && step.is_finite(),
            Method::Dop853 { rtol, atol } => rtol > 0.0 && atol > 0.0,
        };
        if !ok {
            return Err(Error::Config(format!("invalid integrator parameters {:?}", self.method)));
        }
        if self.sampling == Sampling::Uniform(0) {
            return Err(Error::Config("uniform sampling needs at least one interval".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: StepStats,
}

/// Integrate a generic system from `t0` to `t1 > t0`.
///
/// Fixed-step methods other than Gauss need a Hamiltonian and go through
/// [`integrate_flow`].
pub fn integrate_ode(rhs: &dyn OdeRhs, t0: f64, y0: &[f64], t1: f64, cfg: &IntegratorConfig) -> Result<OdeSolution> {
    cfg.validate()?;
    if !(t1 >= t0) {
        return Err(Error::Config(format!("final time {t1} precedes start {t0}")));
    }
    match cfg.method {
        Method::Dop853 { rtol, atol } => dop853(rtol, atol, rhs, t0, y0, t1, cfg),
        Method::Gauss { step } => fixed_step(step, t0, y0, t1, cfg, |t, y, h, stats| gauss2_step(rhs, t, y, h, stats)),
        Method::Verlet { .. } => Err(Error::Unsupported("Störmer–Verlet needs a separable Hamiltonian".into())),
    }
}

fn output_times(t0: f64, t1: f64, sampling: Sampling) -> Vec<f64> {
    match sampling {
        Sampling::EveryStep => vec![t1],
        Sampling::Uniform(k) => (1..=k).map(|i| if i == k { t1 } else { t0 + (t1 - t0) * i as f64 / k as f64 }).collect(),
    }
}

fn fixed_step(
    step: f64,
    t0: f64,
    y0: &[f64],
    t1: f64,
    cfg: &IntegratorConfig,
    mut advance: impl FnMut(f64, &[f64], f64, &mut StepStats) -> Result<Vec<f64>>,
) -> Result<OdeSolution> {
    let mut sol = OdeSolution { times: vec![t0], states: vec![y0.to_vec()], stats: StepStats::default() };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut seg_start = t0;
    for target in output_times(t0, t1, cfg.sampling) {
        let len = target - seg_start;
        let steps = ((len / step).round() as usize).max(1);
        if (len / steps as f64 - step).abs() > 1e-9 * step {
            debug!("fixed step adjusted from {step} to {} so that segments end exactly", len / steps as f64);
        }
        let h = len / steps as f64;
        for s in 0..steps {
            if sol.stats.accepted >= cfg.max_steps {
                return Err(Error::Integration { t, last_state: y, message: "maximum number of steps reached".into() });
            }
            let y_new = advance(t, &y, h, &mut sol.stats)?;
            if y_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integration { t, last_state: y, message: "non-finite state".into() });
            }
            y = y_new;
            t = if s + 1 == steps { target } else { seg_start + h * (s + 1) as f64 };
            sol.stats.accepted += 1;
            if cfg.sampling == Sampling::EveryStep {
                sol.times.push(t);
                sol.states.push(y.clone());
            }
        }
        seg_start = target;
        if cfg.sampling != Sampling::EveryStep {
            sol.times.push(t);
            sol.states.push(y.clone());
        }
    }
    Ok(sol)
}

const GAUSS_SQRT3_6: f64 = 0.288_675_134_594_812_9;

fn gauss2_step(rhs: &dyn OdeRhs, t: f64, y: &[f64], h: f64, stats: &mut StepStats) -> Result<Vec<f64>> {
    let a = [[0.25, 0.25 - GAUSS_SQRT3_6], [0.25 + GAUSS_SQRT3_6, 0.25]];
    let c = [0.5 - GAUSS_SQRT3_6, 0.5 + GAUSS_SQRT3_6];
    let f0 = rhs.rhs(t, y);
    stats.evaluations += 1;
    let mut k = [f0.clone(), f0];
    let mut converged = false;
    for _ in 0..100 {
        let mut change: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let mut next = [Vec::new(), Vec::new()];
        for i in 0..2 {
            let yi: Vec<f64> = (0..y.len()).map(|m| y[m] + h * (a[i][0] * k[0][m] + a[i][1] * k[1][m])).collect();
            next[i] = rhs.rhs(t + c[i] * h, &yi);
            stats.evaluations += 1;
            for m in 0..y.len() {
                change = change.max((next[i][m] - k[i][m]).abs());
                scale = scale.max(next[i][m].abs());
            }
        }
        k = next;
        if change <= 4.0 * f64::EPSILON * scale.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!("Gauss collocation fixed point did not fully converge at t = {t}");
    }
    Ok((0..y.len()).map(|m| y[m] + h * 0.5 * (k[0][m] + k[1][m])).collect())
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

fn rms_norm(v: &[f64], scale: &[f64]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / v.len() as f64).sqrt()
}

fn initial_step(rhs: &dyn OdeRhs, t0: f64, y0: &[f64], f0: &[f64], rtol: f64, atol: f64, span: f64) -> f64 {
    let scale: Vec<f64> = y0.iter().map(|v| atol + v.abs() * rtol).collect();
    let d0 = rms_norm(y0, &scale);
    let d1 = rms_norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let f1 = rhs.rhs(t0 + h0, &y1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 8.0) };
    (100.0 * h0).min(h1).min(span)
}

fn dop853(
    rtol: f64,
    atol: f64,
    rhs: &dyn OdeRhs,
    t0: f64,
    y0: &[f64],
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<OdeSolution> {
    let n = y0.len();
    let mut sol = OdeSolution { times: vec![t0], states: vec![y0.to_vec()], stats: StepStats::default() };
    if t1 == t0 {
        return Ok(sol);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut f = rhs.rhs(t, &y);
    sol.stats.evaluations += 1;
    let mut h_abs = initial_step(rhs, t0, y0, &f, rtol, atol, t1 - t0);
    sol.stats.evaluations += 1;
    let targets = output_times(t0, t1, cfg.sampling);
    let mut next_out = 0;
    let mut k = vec![vec![0.0; n]; STAGES + 1];
    let mut rejected_last = false;

    while t < t1 {
        let target = targets[next_out];
        let min_step = 10.0 * f64::EPSILON * t.abs().max(1.0);
        if h_abs < min_step {
            return Err(Error::Integration { t, last_state: y, message: format!("step size underflow ({h_abs:.3e})") });
        }
        if sol.stats.accepted + sol.stats.rejected >= cfg.max_steps {
            return Err(Error::Integration { t, last_state: y, message: "maximum number of steps reached".into() });
        }
        let clamped = t + h_abs >= target;
        let h = if clamped { target - t } else { h_abs };

        k[0].copy_from_slice(&f);
        let mut ys = vec![0.0; n];
        for s in 1..STAGES {
            for m in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s][j] * k[j][m];
                }
                ys[m] = y[m] + h * acc;
            }
            k[s] = rhs.rhs(t + C[s] * h, &ys);
        }
        let mut y_new = vec![0.0; n];
        for m in 0..n {
            let mut acc = 0.0;
            for j in 0..STAGES {
                acc += B[j] * k[j][m];
            }
            y_new[m] = y[m] + h * acc;
        }
        let f_new = rhs.rhs(t + h, &y_new);
        k[STAGES] = f_new.clone();
        sol.stats.evaluations += STAGES;

        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for m in 0..n {
            let scale = atol + y[m].abs().max(y_new[m].abs()) * rtol;
            let (mut a5, mut a3) = (0.0, 0.0);
            for j in 0..=STAGES {
                a5 += E5[j] * k[j][m];
                a3 += E3[j] * k[j][m];
            }
            e5 += (a5 / scale) * (a5 / scale);
            e3 += (a3 / scale) * (a3 / scale);
        }
        let err = if e5 == 0.0 && e3 == 0.0 { 0.0 } else { h * e5 / ((e5 + 0.01 * e3) * n as f64).sqrt() };

        let finite = err.is_finite() && y_new.iter().chain(&f_new).all(|v| v.is_finite());
        if finite && err < 1.0 {
            let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(ERROR_EXPONENT)).min(MAX_FACTOR) };
            let factor = if rejected_last { factor.min(1.0) } else { factor };
            if !rhs.in_domain(&y_new) {
                return Err(Error::Integration {
                    t,
                    last_state: y,
                    message: format!("trajectory left the domain near t = {}", t + h),
                });
            }
            let h_next = h * factor;
            h_abs = if clamped { h_abs.max(h_next) } else { h_next };
            t = if clamped { target } else { t + h };
            y = y_new;
            f = f_new;
            sol.stats.accepted += 1;
            rejected_last = false;
            let hit = clamped;
            if cfg.sampling == Sampling::EveryStep || hit {
                sol.times.push(t);
                sol.states.push(y.clone());
            }
            if hit {
                next_out += 1;
                if next_out == targets.len() {
                    break;
                }
            }
        } else {
            let factor = if finite { (SAFETY * err.powf(ERROR_EXPONENT)).max(MIN_FACTOR) } else { 0.25 };
            h_abs = h * factor;
            sol.stats.rejected += 1;
            rejected_last = true;
        }
    }
    Ok(sol)
}

struct FlowRhs<'a>(&'a HamiltonianSystem);

impl OdeRhs for FlowRhs<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Vec<f64> {
        self.0.vector_field(y)
    }
    fn in_domain(&self, y: &[f64]) -> bool {
        self.0.in_domain(y)
    }
}

/// A Hamiltonian system viewed as a first-order ODE.
pub fn flow_rhs(system: &HamiltonianSystem) -> impl OdeRhs + '_ {
    FlowRhs(system)
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub method: Method,
    pub stats: StepStats,
    /// Drift of `H` along the trajectory.
    pub energy_drift: Drift,
}

impl Trajectory {
    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("trajectories hold at least the initial state")
    }
}

/// Integrate Hamilton's equations from `x0` over `[0, t_final]`.
pub fn integrate_flow(system: &HamiltonianSystem, x0: &PhasePoint, t_final: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if x0.n() != system.n {
        return Err(Error::Config(format!("initial state has {} degrees of freedom, system {} has {}", x0.n(), system.name, system.n)));
    }
    let y0 = x0.to_flat();
    if !system.in_domain(&y0) {
        return Err(Error::Integration { t: 0.0, last_state: y0, message: "initial state outside the domain".into() });
    }
    let sol = match cfg.method {
        Method::Verlet { step } => {
            cfg.validate()?;
            check_separable(system, &y0)?;
            fixed_step(step, 0.0, &y0, t_final, cfg, |t, y, h, stats| {
                let y_new = verlet_step(system, y, h);
                stats.evaluations += 2;
                if !system.in_domain(&y_new) {
                    return Err(Error::Integration { t, last_state: y.to_vec(), message: "trajectory left the domain".into() });
                }
                Ok(y_new)
            })?
        }
        Method::Gauss { step } => {
            cfg.validate()?;
            let rhs = FlowRhs(system);
            fixed_step(step, 0.0, &y0, t_final, cfg, |t, y, h, stats| {
                let y_new = gauss2_step(&rhs, t, y, h, stats)?;
                if !system.in_domain(&y_new) {
                    return Err(Error::Integration { t, last_state: y.to_vec(), message: "trajectory left the domain".into() });
                }
                Ok(y_new)
            })?
        }
        Method::Dop853 { .. } => integrate_ode(&FlowRhs(system), 0.0, &y0, t_final, cfg)?,
    };
    let states: Vec<PhasePoint> = sol.states.iter().map(|y| PhasePoint::from_flat(y)).collect();
    let mut traj = Trajectory { times: sol.times, states, method: cfg.method, stats: sol.stats, energy_drift: Drift::default() };
    traj.energy_drift = conservation_drift(&system.h, &traj);
    Ok(traj)
}

fn partial_gradient(h: &Observable, y: &[f64], range: std::ops::Range<usize>) -> Vec<f64> {
    range.map(|i| h.field().eval(&seed(y, i))[0].eps).collect()
}

fn verlet_step(system: &HamiltonianSystem, y: &[f64], h: f64) -> Vec<f64> {
    let n = system.n;
    let mut z = y.to_vec();
    let dq = partial_gradient(&system.h, &z, 0..n);
    for mu in 0..n {
        z[n + mu] -= 0.5 * h * dq[mu];
    }
    let dp = partial_gradient(&system.h, &z, n..2 * n);
    for mu in 0..n {
        z[mu] += h * dp[mu];
    }
    let dq = partial_gradient(&system.h, &z, 0..n);
    for mu in 0..n {
        z[n + mu] -= 0.5 * h * dq[mu];
    }
    z
}

/// Reject Störmer–Verlet when `∂²H/∂q∂p` does not vanish at `y`.
fn check_separable(system: &HamiltonianSystem, y: &[f64]) -> Result<()> {
    let n = system.n;
    for i in 0..n {
        let inner = seed(y, i);
        for j in n..2 * n {
            let v = system.h.field().eval(&seed(&inner, j))[0].eps.eps;
            if v.abs() > 1e-12 {
                return Err(Error::Unsupported(format!(
                    "{} is not separable (∂²H/∂q{}∂p{} = {v:.3e}); use the Gauss method",
                    system.name,
                    i + 1,
                    j - n + 1
                )));
            }
        }
    }
    Ok(())
}
