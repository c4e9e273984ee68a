//! Executing one scenario at one sweep point.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use hidsym::dynamics::{
    conservation_drift, gradient_rank, integrate_flow, poisson_bracket, HamiltonianSystem, IntegratorConfig, Observable,
    PhasePoint, Trajectory,
};
use hidsym::eisenhart::{lift_toda, null_lift, scalar_lift, LiftKind, ScalarLift};
use hidsym::lax::{lax_residual_at, spectral_drift, trace_invariants, LaxPair};
use hidsym::sampling::{CoordBox, Sampler};
use hidsym::systems::{Kepler, SystemConfig, SystemSpec, Toda};

use crate::error::CliError;
use crate::report::{overall, CheckResult, RunReport, Status};
use crate::scenario::{Check, CheckKind, Expect, Loaded, PhaseBox};

/// Time series destined for one CSV file.
#[derive(Clone, Debug)]
pub struct Table {
    pub stem: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Everything a run produced, before anything is written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub tables: Vec<Table>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunSettings {
    pub seed: u64,
    pub tol_scale: f64,
}

enum Lifted {
    None,
    Null(hidsym::eisenhart::NullLift),
    Scalar { lift: ScalarLift, p_y: Vec<f64>, lax: Option<LaxPair>, invariants: Vec<Observable> },
}

/// The flow the checks look at: for scalar lifts this is the lifted one.
struct Dynamics {
    system: HamiltonianSystem,
    lax: Option<LaxPair>,
    invariants: Vec<Observable>,
    trajectories: Vec<Trajectory>,
}

struct Prepared {
    config: SystemConfig,
    spec: SystemSpec,
    lifted: Lifted,
    initial: Vec<PhasePoint>,
    /// base-coordinate trajectories, one per initial state
    base: Vec<Trajectory>,
    dynamics: Dynamics,
    integrator: IntegratorConfig,
    t_final: f64,
}

fn broadcast(value: Option<&toml::Value>, len: usize) -> Result<Vec<f64>, CliError> {
    let num = |v: &toml::Value| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
    match value {
        None => Ok(vec![1.0; len]),
        Some(toml::Value::Array(a)) => {
            let v: Vec<f64> = a.iter().map(|x| num(x).ok_or_else(|| CliError::Config("p_y entries must be numbers".into()))).collect::<Result<_, _>>()?;
            if v.len() != len {
                return Err(CliError::Config(format!("lift needs {len} extra momenta, got {}", v.len())));
            }
            Ok(v)
        }
        Some(v) => num(v).map(|x| vec![x; len]).ok_or_else(|| CliError::Config("p_y must be a number or a list".into())),
    }
}

fn phase_box(b: &PhaseBox) -> Result<(CoordBox, CoordBox), CliError> {
    Ok((CoordBox::new(b.q_lo.clone(), b.q_hi.clone())?, CoordBox::new(b.p_lo.clone(), b.p_hi.clone())?))
}

fn initial_states(loaded: &Loaded, spec: &SystemSpec, seed: u64) -> Result<Vec<PhasePoint>, CliError> {
    let n = spec.system.n;
    let states = match &loaded.scenario.initial {
        None => vec![spec.reference.clone().ok_or_else(|| CliError::Config(format!("{} has no reference state; give [initial]", spec.name)))?],
        Some(init) => match (&init.q, &init.p, &init.random) {
            (Some(q), Some(p), None) => vec![PhasePoint::new(q.clone(), p.clone())?],
            (None, None, Some(r)) => {
                let (qb, pb) = phase_box(&r.bx)?;
                let system = spec.system.clone();
                Sampler::new(seed).phase_points(&qb, &pb, r.count, |x| system.in_domain(&x.to_flat()))?
            }
            _ => return Err(CliError::Config("initial: give either both q and p or a random table".into())),
        },
    };
    if let Some(x) = states.iter().find(|x| x.n() != n) {
        return Err(CliError::Config(format!("initial state has {} degrees of freedom, {} has {n}", x.n(), spec.name)));
    }
    if let Some(x) = states.iter().find(|x| !spec.system.in_domain(&x.to_flat())) {
        return Err(CliError::Config(format!("initial state {x:?} lies outside the domain of {}", spec.name)));
    }
    Ok(states)
}

fn prepare(loaded: &Loaded, point: &BTreeMap<String, f64>, settings: RunSettings) -> Result<Prepared, CliError> {
    let sc = &loaded.scenario;
    let config = sc.system_config(point)?;
    let spec = config.build()?;
    let integrator = sc.integrator.config()?;
    let t_final = sc.integrator.t_final;
    let initial = initial_states(loaded, &spec, settings.seed)?;

    let p_y_value = match point.get("p_y") {
        Some(v) => Some(toml::Value::Float(*v)),
        None => sc.lift.as_ref().and_then(|l| l.p_y.clone()),
    };
    if point.contains_key("p_y") && sc.lift.as_ref().is_none_or(|l| l.kind == LiftKind::Null) {
        return Err(CliError::Config("p_y can only be swept for scalar or generalized lifts".into()));
    }
    let lifted = match sc.lift.as_ref().map(|l| l.kind) {
        None => Lifted::None,
        Some(LiftKind::Null) => {
            if sc.lift.as_ref().is_some_and(|l| l.p_y.is_some()) {
                return Err(CliError::Config("the null lift takes no p_y".into()));
            }
            Lifted::Null(null_lift(&spec.system)?)
        }
        Some(LiftKind::Scalar) => {
            let lift = scalar_lift(&spec.system)?;
            let p_y = broadcast(p_y_value.as_ref(), 1)?;
            let invariants = vec![lift.system().h.clone()];
            Lifted::Scalar { lift, p_y, lax: None, invariants }
        }
        Some(LiftKind::Generalized) => {
            let SystemConfig::Toda { g } = &config else {
                return Err(CliError::Config(format!("the generalized lift is built for the Toda chain, not '{}'", sc.system.preset)));
            };
            let lt = lift_toda(&Toda::new(g.clone())?)?;
            let p_y = broadcast(p_y_value.as_ref(), g.len())?;
            let invariants = lt.invariants();
            Lifted::Scalar { lift: lt.lift, p_y, lax: Some(lt.lax), invariants }
        }
    };

    let mut base = Vec::with_capacity(initial.len());
    let mut lifted_trajs = Vec::new();
    for x in &initial {
        match &lifted {
            Lifted::None => base.push(integrate(&spec.system, x, t_final, &integrator)?),
            Lifted::Null(l) => {
                let traj = integrate(l.system(), &l.initial_data(x)?, t_final, &integrator)?;
                base.push(l.project(&traj).map_err(run_error)?);
            }
            Lifted::Scalar { lift, p_y, .. } => {
                let traj = integrate(lift.system(), &lift.lift_state(x, p_y)?, t_final, &integrator)?;
                base.push(lift.project(&traj, 1e-9).map_err(run_error)?);
                lifted_trajs.push(traj);
            }
        }
    }
    let dynamics = match &lifted {
        Lifted::None | Lifted::Null(_) => Dynamics {
            system: spec.system.clone(),
            lax: spec.lax.clone(),
            invariants: spec.invariants.clone(),
            trajectories: base.clone(),
        },
        Lifted::Scalar { lift, lax, invariants, .. } => Dynamics {
            system: lift.system().clone(),
            lax: lax.clone(),
            invariants: invariants.clone(),
            trajectories: lifted_trajs,
        },
    };
    Ok(Prepared { config, spec, lifted, initial, base, dynamics, integrator, t_final })
}

fn run_error(e: hidsym::Error) -> CliError {
    CliError::Run(e.to_string())
}

fn integrate(system: &HamiltonianSystem, x: &PhasePoint, t: f64, cfg: &IntegratorConfig) -> Result<Trajectory, CliError> {
    integrate_flow(system, x, t, cfg).map_err(|e| CliError::Run(format!("integration of {} failed: {e}", system.name)))
}

fn max_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.q.iter().chain(&x.p).zip(y.q.iter().chain(&y.p)).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

fn find<'a>(obs: &'a [Observable], names: &[String]) -> Result<Vec<&'a Observable>, String> {
    if names.is_empty() {
        return Ok(obs.iter().collect());
    }
    names
        .iter()
        .map(|n| {
            obs.iter().find(|o| &o.name == n).ok_or_else(|| {
                format!("unknown invariant '{n}'; available: {}", obs.iter().map(|o| o.name.as_str()).collect::<Vec<_>>().join(", "))
            })
        })
        .collect()
}

/// Raw measured value of a check.
fn measure(check: &Check, index: usize, prep: &Prepared, seed: u64) -> Result<f64, String> {
    let err = |e: hidsym::Error| e.to_string();
    let sampler = || Sampler::new(seed.wrapping_add(0x9e37_79b9).wrapping_mul(index as u64 + 1));
    let dyns = &prep.dynamics;
    match &check.kind {
        CheckKind::Drift { invariants } => {
            let obs = find(&dyns.invariants, invariants)?;
            Ok(dyns
                .trajectories
                .iter()
                .flat_map(|t| obs.iter().map(move |o| conservation_drift(o, t).max_abs))
                .fold(0.0, f64::max))
        }
        CheckKind::Involution { invariants, points, bx } => {
            let obs = find(&prep.spec.invariants, invariants)?;
            let (qb, pb) = phase_box(bx).map_err(|e| e.to_string())?;
            let sys = &prep.spec.system;
            let pts = sampler().phase_points(&qb, &pb, *points, |x| sys.in_domain(&x.to_flat())).map_err(err)?;
            let mut worst: f64 = 0.0;
            for x in &pts {
                for i in 0..obs.len() {
                    for j in i + 1..obs.len() {
                        worst = worst.max(poisson_bracket(obs[i], obs[j], x).map_err(err)?.abs());
                    }
                }
            }
            Ok(worst)
        }
        CheckKind::KeplerAlgebra { points } => {
            let kep = kepler(&prep.config)?;
            let sys = kep.system();
            let qb = CoordBox::cube(3, 2.0);
            let pb = CoordBox::cube(3, 1.5);
            let mut s = sampler();
            let far = |x: &PhasePoint| x.q.iter().map(|v| v * v).sum::<f64>().sqrt() > 0.3;
            let bound = s.phase_points(&qb, &pb, *points, |x| far(x) && sys.energy(x) < -1e-2).map_err(err)?;
            let free = s.phase_points(&qb, &pb, *points, |x| far(x) && sys.energy(x) > 1e-2).map_err(err)?;
            bound.iter().chain(&free).map(|x| kep.algebra_residual(x).map_err(err)).try_fold(0.0, |a: f64, r| Ok(a.max(r?)))
        }
        CheckKind::KeplerRank { .. } => {
            let kep = kepler(&prep.config)?;
            let mut obs = vec![kep.system().h];
            obs.extend(kep.angular_momentum());
            obs.extend(kep.runge_lenz());
            // the rank is generic, so report the smallest over the initial states
            prep.initial
                .iter()
                .map(|x| gradient_rank(&obs, x, check.threshold).map_err(err))
                .try_fold(usize::MAX, |a, r| Ok(a.min(r?)))
                .map(|r| r as f64)
        }
        CheckKind::LaxEquation => {
            let lax = dyns.lax.as_ref().ok_or("this system has no Lax pair")?;
            let mut worst: f64 = 0.0;
            for t in &dyns.trajectories {
                for x in &t.states {
                    worst = worst.max(lax_residual_at(lax, &dyns.system, x).map_err(err)?);
                }
            }
            Ok(worst)
        }
        CheckKind::Isospectral => {
            let lax = dyns.lax.as_ref().ok_or("this system has no Lax pair")?;
            dyns.trajectories.iter().map(|t| spectral_drift(lax, t).map(|r| r.drift()).map_err(err)).try_fold(0.0, |a: f64, r| Ok(a.max(r?)))
        }
        CheckKind::TraceIdentity { points, bx } => {
            let lax = prep.spec.lax.as_ref().ok_or("this system has no Lax pair")?;
            let (qb, pb) = phase_box(bx).map_err(|e| e.to_string())?;
            let sys = &prep.spec.system;
            let pts = sampler().phase_points(&qb, &pb, *points, |x| sys.in_domain(&x.to_flat())).map_err(err)?;
            let mut worst: f64 = 0.0;
            for x in &pts {
                let tr = trace_invariants(lax, x, 2).map_err(err)?;
                worst = worst.max((0.5 * tr[1].re - sys.energy(x)).abs());
            }
            Ok(worst)
        }
        CheckKind::RoundTrip => {
            let mut worst: f64 = 0.0;
            for (x, projected) in prep.initial.iter().zip(&prep.base) {
                let direct = match &prep.lifted {
                    Lifted::None => return Err("round-trip needs a [lift] section".into()),
                    Lifted::Null(_) => integrate_flow(&prep.spec.system, x, prep.t_final, &prep.integrator).map_err(err)?,
                    Lifted::Scalar { lift, p_y, .. } => {
                        let base = lift.effective_base(p_y).map_err(err)?;
                        integrate_flow(&base, x, prep.t_final, &prep.integrator).map_err(err)?
                    }
                };
                worst = worst.max(max_gap(projected, &direct));
            }
            Ok(worst)
        }
    }
}

fn kepler(config: &SystemConfig) -> Result<Kepler, String> {
    match config {
        SystemConfig::Kepler { m, k, spherical: false } => Kepler::new(*m, *k).map_err(|e| e.to_string()),
        _ => Err("this check needs the Cartesian kepler system".into()),
    }
}

fn evaluate(check: &Check, index: usize, prep: &Prepared, settings: RunSettings, point: &BTreeMap<String, f64>) -> CheckResult {
    let name = check.label();
    let threshold = match check.kind {
        CheckKind::KeplerRank { .. } => check.threshold,
        _ => match check.expect {
            Expect::Below => check.threshold * settings.tol_scale,
            Expect::Above => check.threshold / settings.tol_scale,
        },
    };
    if !check.applies_at(point) {
        return CheckResult { name, status: Status::Skip, value: None, threshold, expect: check.expect, wall_time_s: 0.0, detail: None };
    }
    let start = Instant::now();
    let measured = measure(check, index, prep, settings.seed);
    let wall_time_s = start.elapsed().as_secs_f64();
    let (status, value, detail) = match measured {
        Err(msg) => (Status::Error, None, Some(msg)),
        Ok(v) => {
            let pass = match (&check.kind, check.expect) {
                (CheckKind::KeplerRank { rank }, _) => v == *rank as f64,
                (_, Expect::Below) => v < threshold,
                (_, Expect::Above) => v > threshold,
            };
            (if pass { Status::Pass } else { Status::Fail }, Some(v), None)
        }
    };
    CheckResult { name, status, value: value.filter(|v| v.is_finite()), threshold, expect: check.expect, wall_time_s, detail }
}

fn tables(loaded: &Loaded, prep: &Prepared, stem: &str) -> Vec<Table> {
    let n = prep.spec.system.n;
    let dyns = &prep.dynamics;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("q{i}")));
    header.extend((1..=n).map(|i| format!("p{i}")));
    header.extend(dyns.invariants.iter().map(|o| o.name.clone()));
    let many = prep.base.len() > 1;
    prep.base
        .iter()
        .zip(&dyns.trajectories)
        .enumerate()
        .map(|(k, (base, dynamic))| {
            let rows = base
                .times
                .iter()
                .zip(base.states.iter().zip(&dynamic.states))
                .map(|(t, (x, y))| {
                    let mut row = Vec::with_capacity(header.len());
                    row.push(*t);
                    row.extend(&x.q);
                    row.extend(&x.p);
                    row.extend(dyns.invariants.iter().map(|o| o.value(y)));
                    row
                })
                .collect();
            let stem = if many { format!("{stem}-ic{k}") } else { stem.to_string() };
            let _ = loaded;
            Table { stem, header: header.clone(), rows }
        })
        .collect()
}

/// Run every check of the scenario at one point of its parameter space.
pub fn run_point(loaded: &Loaded, point: &BTreeMap<String, f64>, settings: RunSettings, stem: &str) -> Result<RunOutput, CliError> {
    let prep = prepare(loaded, point, settings)?;
    let checks: Vec<CheckResult> = loaded
        .scenario
        .checks
        .par_iter()
        .enumerate()
        .map(|(i, c)| evaluate(c, i, &prep, settings, point))
        .collect();
    let status = overall(checks.iter().map(|c| &c.status));
    let tables = if loaded.scenario.output.trajectories { tables(loaded, &prep, stem) } else { vec![] };
    let report = RunReport {
        scenario: loaded.scenario.name.clone(),
        scenario_hash: loaded.hash.clone(),
        seed: settings.seed,
        point: point.clone(),
        status,
        checks,
        files: vec![],
    };
    Ok(RunOutput { report, tables })
}
