use hidsym::autodiff::{DynField, FieldFn, Scalar};
use hidsym::dynamics::{
    conservation_drift, integrate_flow, poisson_bracket, Degree, HamiltonianSystem, IntegratorConfig, NaturalDecomposition,
    Observable, PhasePoint, Sampling, Trajectory,
};
use hidsym::eisenhart::{
    generalized_lift, grade_by_scaling, grading_profile, lift_toda, null_lift, scalar_lift, NullLift,
};
use hidsym::geometry::{curvature, killing_tensor_residual, killing_vector_residual, MetricField};
use hidsym::lax::{lax_residual_at, spectral_drift};
use hidsym::sampling::{CoordBox, Sampler};
use hidsym::systems::{Calogero, Kepler, Oscillator, QuantumDot, Toda};
use hidsym::Error;
use proptest::prelude::*;

fn cfg(intervals: usize) -> IntegratorConfig {
    IntegratorConfig::default().sampled(Sampling::Uniform(intervals))
}

fn max_state_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.states.len(), b.states.len());
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| x.to_flat().into_iter().zip(y.to_flat()).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

fn bases() -> Vec<(HamiltonianSystem, PhasePoint)> {
    let osc = Oscillator::new(2, 1.0, 1.0).unwrap();
    let kep = Kepler::new(1.0, 1.0).unwrap();
    let dot = QuantumDot::new(1.0, 2.0, 0.3, 0.1).unwrap();
    vec![
        (osc.system(), PhasePoint::new(vec![0.7, -0.2], vec![0.1, 0.5]).unwrap()),
        (kep.system(), PhasePoint::new(vec![1.0, 0.1, 0.2], vec![0.1, 0.9, 0.15]).unwrap()),
        (dot.system(), PhasePoint::new(vec![1.0, 0.3, 0.4], vec![0.1, -0.2, 0.6]).unwrap()),
    ]
}

fn lifted_points(lift: &NullLift, base: &PhasePoint, count: usize, seed: u64) -> Vec<PhasePoint> {
    let mut s = Sampler::new(seed);
    (0..count)
        .map(|_| {
            let q: Vec<f64> = base.q.iter().map(|&v| v + s.uniform(-0.2, 0.2)).collect();
            let p: Vec<f64> = base.p.iter().map(|&v| v + s.uniform(-0.3, 0.3)).collect();
            let mut y = lift.initial_data(&PhasePoint::new(q, p).unwrap()).unwrap();
            y.q[0] = s.uniform(-1.0, 1.0);
            y.q[1] = s.uniform(-1.0, 1.0);
            y.p[0] *= s.uniform(0.5, 2.0);
            y.p[1] += s.uniform(-0.5, 0.5);
            y
        })
        .collect()
}

#[test]
fn lifted_metric_is_lorentzian_with_null_killing_vector() {
    for (base, x0) in bases() {
        let lift = null_lift(&base).unwrap();
        let pts = lifted_points(&lift, &x0, 20, 3);
        // the closed-form Ĥ agrees with the geodesic Hamiltonian of ĝ
        assert!(lift.system().decomposition_mismatch(&pts).unwrap() < 1e-12, "{}", base.name);
        let dv = lift.null_vector();
        for y in &pts {
            assert_eq!(lift.metric().negative_eigenvalues(&y.q), 1);
            assert!(killing_vector_residual(lift.metric(), &dv, &y.q).unwrap().max_abs() < 1e-10);
            let g = lift.metric().g(&y.q);
            assert_eq!(g[(1, 0)], 1.0);
            assert_eq!(g[(0, 0)], 0.0);
        }
    }
}

#[test]
fn kepler_lift_components_by_hand() {
    let kep = Kepler::new(2.0, 3.0).unwrap();
    let lift = null_lift(&kep.system()).unwrap();
    let y = [0.4, -0.1, 1.0, 2.0, 2.0];
    let g = lift.metric().g(&y);
    // ĝ_tt = −2V/m = 2k/(m r) with r = 3
    assert!((g[(1, 1)] - 1.0).abs() < 1e-15);
    assert!((g[(2, 2)] - 1.0).abs() < 1e-15 && g[(1, 2)] == 0.0);
    let pv = 2.0;
    let pt = -0.7;
    let p = [0.3, -0.4, 0.5];
    let x = PhasePoint::new(y.to_vec(), [pv, pt].iter().chain(&p).copied().collect()).unwrap();
    // (1/2m)|p|² + p_v p_t/m + V p_v²/m² with V = −1
    let expect = 0.5 / 2.0 * 0.5 + pv * pt / 2.0 - 1.0 * pv * pv / 4.0;
    assert!((lift.system().h.value(&x) - expect).abs() < 1e-14);
}

#[test]
fn quantum_dot_lift_carries_the_vector_potential() {
    let dot = QuantumDot::new(1.0, 2.0, 0.3, 0.1).unwrap();
    let lift = null_lift(&dot.system()).unwrap();
    let y = [0.0, 0.0, 1.5, 0.2, 0.7];
    let g = lift.metric().g(&y);
    // ĝ_tφ = (e/m) A_φ = ω_L ρ²
    assert!((g[(1, 4)] - 0.3 * 2.25).abs() < 1e-15);
    assert!((g[(4, 1)] - 0.3 * 2.25).abs() < 1e-15);
    assert!((g[(4, 4)] - 2.25).abs() < 1e-15);
}

#[test]
fn null_round_trips_reproduce_the_base_flow() {
    for (base, x0) in bases() {
        let lift = null_lift(&base).unwrap();
        let y0 = lift.initial_data(&x0).unwrap();
        assert!(lift.system().energy(&y0).abs() < 1e-14);
        let lifted = integrate_flow(lift.system(), &y0, 10.0, &cfg(200)).unwrap();
        let projected = lift.project(&lifted).unwrap();
        let direct = integrate_flow(&base, &x0, 10.0, &cfg(200)).unwrap();
        let gap = max_state_gap(&projected, &direct);
        assert!(gap < 1e-6, "{}: {gap:e}", base.name);
        for (t, lam) in projected.times.iter().zip(&direct.times) {
            assert!((t - lam).abs() < 1e-9);
        }
        for (y, x) in lifted.states.iter().zip(&projected.states) {
            assert!((y.p[1] + base.energy(x)).abs() < 1e-9, "{}", base.name);
            assert!((y.p[0] - lift.mass()).abs() < 1e-11);
        }
    }
}

#[test]
fn projection_rejects_states_off_the_null_surface() {
    let (base, x0) = bases().remove(0);
    let lift = null_lift(&base).unwrap();
    let mut y0 = lift.initial_data(&x0).unwrap();
    y0.p[1] += 1e-3;
    let traj = integrate_flow(lift.system(), &y0, 1.0, &cfg(10)).unwrap();
    assert!(matches!(lift.project(&traj), Err(Error::Numerical(_))));

    let y0 = lift.initial_data(&x0).unwrap();
    let mut traj = integrate_flow(lift.system(), &y0, 1.0, &cfg(10)).unwrap();
    traj.states[5].p[0] += 1e-6;
    let msg = lift.project(&traj).unwrap_err().to_string();
    assert!(msg.contains("consistency"), "{msg}");
}

#[test]
fn lifted_runge_lenz_is_conserved() {
    let kep = Kepler::new(1.0, 1.0).unwrap();
    let lift = null_lift(&kep.system()).unwrap();
    let x0 = PhasePoint::new(vec![1.0, 0.1, 0.2], vec![0.1, 0.9, 0.15]).unwrap();
    let traj = integrate_flow(lift.system(), &lift.initial_data(&x0).unwrap(), 10.0, &IntegratorConfig::default()).unwrap();
    for a in kep.runge_lenz() {
        let hat = lift.lift_observable(&a).unwrap();
        assert_eq!(hat.degree, Degree::Poly(2));
        let d = conservation_drift(&hat, &traj);
        assert!(d.max_abs < 1e-7, "{}: {:e}", hat.name, d.max_abs);
        // on p_v = m the lift restricts to the base invariant
        assert!((hat.value(&traj.states[0]) - a.value(&x0)).abs() < 1e-14);
    }
}

#[test]
fn missing_grading_is_an_error() {
    let kep = Kepler::new(1.0, 1.0).unwrap();
    let lift = null_lift(&kep.system()).unwrap();
    let ungraded = Observable::coordinate(3, 0, true);
    assert!(matches!(lift.lift_observable(&ungraded), Err(Error::Config(_))));
    assert!(lift.lift_observable(&kep.scaled_runge_lenz()[0]).is_err());
    assert!(lift.lift_polynomial(&kep.scaled_runge_lenz()[0]).is_err());
    assert!(lift.lift_polynomial(&ungraded).is_ok());
}

#[test]
fn scaling_grading_matches_the_explicit_split() {
    let kep = Kepler::new(1.3, 0.8).unwrap();
    let a = kep.runge_lenz()[1].clone();
    let graded = grade_by_scaling(&a, 2).unwrap();
    let pts: Vec<PhasePoint> = (0..10)
        .map(|i| {
            let s = i as f64 * 0.37;
            PhasePoint::new(vec![1.0 + s.sin(), 0.3 * s, -0.5], vec![s.cos(), 0.2, 0.7 - s]).unwrap()
        })
        .collect();
    let profile = grading_profile(&graded, &pts).unwrap();
    // no linear part
    assert!(profile[1].1 < 1e-10, "{profile:?}");
    let explicit = a.grading().unwrap();
    for x in &pts {
        for (deg, part) in explicit {
            let (_, mine) = graded.grading().unwrap().iter().find(|(d, _)| d == deg).unwrap();
            assert!((mine.value(x) - part.value(x)).abs() < 1e-10);
        }
    }
}

#[test]
fn lifted_observables_are_homogeneous() {
    let kep = Kepler::new(1.0, 1.0).unwrap();
    let klift = null_lift(&kep.system()).unwrap();
    let cal = Calogero::new(3, 1.0).unwrap();
    let clift = null_lift(&cal.system()).unwrap();
    let x_kep = PhasePoint::new(vec![1.0, 0.1, 0.2], vec![0.1, 0.9, 0.15]).unwrap();
    let x_cal = PhasePoint::new(vec![-1.0, 0.1, 1.3], vec![0.2, -0.1, 0.3]).unwrap();
    let cases: Vec<(Observable, NullLift, PhasePoint)> = kep
        .runge_lenz()
        .into_iter()
        .map(|a| (a, klift.clone(), x_kep.clone()))
        .chain(cal.invariants().into_iter().map(|i| (i, clift.clone(), x_cal.clone())))
        .collect();
    for (k, lift, x) in cases {
        let hat = lift.lift_polynomial(&k).unwrap();
        let Degree::Poly(deg) = hat.degree else { unreachable!() };
        for y in lifted_points(&lift, &x, 5, 11) {
            let v = hat.value(&y);
            for lam in [2.0, 3.0] {
                let ys = PhasePoint::new(y.q.clone(), y.p.iter().map(|p| p * lam).collect()).unwrap();
                let expect = v * f64::powi(lam, deg as i32);
                assert!((hat.value(&ys) - expect).abs() <= 1e-12 * expect.abs().max(1.0), "{}", hat.name);
            }
        }
    }
}

#[test]
fn lifted_calogero_cubic_is_conserved() {
    let cal = Calogero::new(3, 1.0).unwrap();
    let lift = null_lift(&cal.system()).unwrap();
    let x0 = PhasePoint::new(vec![-1.0, 0.1, 1.3], vec![0.2, -0.1, 0.3]).unwrap();
    let traj = integrate_flow(lift.system(), &lift.initial_data(&x0).unwrap(), 10.0, &IntegratorConfig::default()).unwrap();
    let i3 = lift.lift_polynomial(&cal.invariants()[2]).unwrap();
    assert_eq!(i3.degree, Degree::Poly(3));
    assert!(conservation_drift(&i3, &traj).max_abs < 1e-7);
    let pv_obs = Observable::coordinate(5, 0, true);
    assert!(conservation_drift(&pv_obs, &traj).max_abs < 1e-11);
}

#[test]
fn lifted_angular_momenta_keep_their_algebra() {
    let kep = Kepler::new(1.0, 1.0).unwrap();
    let lift = null_lift(&kep.system()).unwrap();
    let l: Vec<Observable> = kep.angular_momentum().iter().map(|o| lift.lift_polynomial(o).unwrap()).collect();
    let x0 = PhasePoint::new(vec![1.0, 0.1, 0.2], vec![0.1, 0.9, 0.15]).unwrap();
    for y in lifted_points(&lift, &x0, 50, 5) {
        let b = poisson_bracket(&l[0], &l[1], &y).unwrap();
        assert!((b - l[2].value(&y)).abs() < 1e-7);
    }
}

#[test]
fn free_flat_base_lifts_to_flat_space() {
    let base = HamiltonianSystem::natural("free", NaturalDecomposition::new(MetricField::flat(2), 1.0));
    let lift = null_lift(&base).unwrap();
    for y in [[0.1, 0.2, 0.3, -0.4], [1.0, -2.0, 0.5, 0.5]] {
        let r = curvature(lift.metric(), &y).unwrap();
        assert!(r.riemann.max_abs() < 1e-12);
    }
}

struct Constant(f64);

impl FieldFn for Constant {
    fn eval<T: Scalar>(&self, _q: &[T]) -> Vec<T> {
        vec![T::cst(self.0)]
    }
}

#[test]
fn scalar_lift_with_unit_extra_momentum_recovers_the_base() {
    let osc = Oscillator::new(2, 1.0, 1.0).unwrap();
    let base = osc.system();
    let lift = scalar_lift(&base).unwrap();
    assert_eq!(lift.metric().dim, 3);
    let x0 = PhasePoint::new(vec![0.7, -0.2], vec![0.1, 0.5]).unwrap();
    let y0 = lift.lift_state(&x0, &[1.0]).unwrap();
    assert!((lift.system().energy(&y0) - base.energy(&x0)).abs() < 1e-15);
    // the motion stays away from the origin where V vanishes
    let lifted = integrate_flow(lift.system(), &y0, 10.0, &cfg(100)).unwrap();
    let projected = lift.project(&lifted, 1e-12).unwrap();
    let direct = integrate_flow(&base, &x0, 10.0, &cfg(100)).unwrap();
    assert!(max_state_gap(&projected, &direct) < 1e-6);

    let pts = [[0.5, 0.3, 0.0], [-0.2, 0.9, 4.0]];
    let pseudo: Vec<PhasePoint> = pts
        .iter()
        .map(|q| PhasePoint::new(q.to_vec(), vec![0.3, -0.2, 0.8]).unwrap())
        .collect();
    assert!(lift.system().decomposition_mismatch(&pseudo).unwrap() < 1e-12);
}

#[test]
fn scalar_lift_domain_checks() {
    let osc = Oscillator::new(2, 1.0, 1.0).unwrap();
    let lift = scalar_lift(&osc.system()).unwrap();
    let mut s = Sampler::new(2);
    // V = |q|²/2 drops below the floor near the origin
    let around = CoordBox::new(vec![-0.01, -0.01], vec![0.01, 0.01]).unwrap();
    assert!(!lift.check_domain(&around, &mut s, 100).unwrap());
    let away = CoordBox::new(vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
    assert!(lift.check_domain(&away, &mut s, 100).unwrap());
    let tiny = CoordBox::new(vec![-1e-5, -1e-5], vec![1e-5, 1e-5]).unwrap();
    assert!(lift.check_domain(&tiny, &mut s, 20).is_err());
    assert!(lift.metric().check_regular(&[0.0, 1e-4, 0.0]).is_err());
    assert!(lift.metric().check_regular(&[0.5, 1e-4, 0.0]).is_ok());
}

#[test]
fn scalar_lift_refuses_magnetic_systems() {
    let dot = QuantumDot::new(1.0, 2.0, 0.3, 0.1).unwrap();
    assert!(matches!(scalar_lift(&dot.system()), Err(Error::Unsupported(_))));
}

#[test]
fn constant_potential_gives_a_flat_product() {
    let lift = generalized_lift(&MetricField::flat(2), 1.0, vec![(1.0, DynField::new(Constant(0.7)))]).unwrap();
    let r = curvature(lift.metric(), &[0.3, -0.4, 1.0]).unwrap();
    assert!(r.riemann.max_abs() < 1e-12);
    let g = lift.metric().g(&[0.3, -0.4, 1.0]);
    assert!((g[(2, 2)] - 1.0 / 1.4).abs() < 1e-15);
}

#[test]
fn generalized_lift_validation() {
    let v = DynField::new(Constant(1.0));
    assert!(generalized_lift(&MetricField::flat(2), 1.0, vec![]).is_err());
    assert!(generalized_lift(&MetricField::flat(2), 0.0, vec![(1.0, v.clone())]).is_err());
    assert!(generalized_lift(&MetricField::flat(2), 1.0, vec![(0.0, v)]).is_err());
}

fn toda_state(n: usize) -> PhasePoint {
    let q: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.2).collect();
    let p: Vec<f64> = (0..n).map(|i| 0.5 * (1.3 * i as f64).sin()).collect();
    PhasePoint::new(q, p).unwrap()
}

#[test]
fn toda_two_lift_matches_base() {
    let toda = Toda::uniform(2, 1.0).unwrap();
    let lt = lift_toda(&toda).unwrap();
    let x0 = toda_state(2);
    let lifted = integrate_flow(lt.lift.system(), &lt.lift.lift_state(&x0, &[1.0]).unwrap(), 10.0, &cfg(100)).unwrap();
    let direct = integrate_flow(&toda.system(), &x0, 10.0, &cfg(100)).unwrap();
    assert!(max_state_gap(&lt.lift.project(&lifted, 1e-12).unwrap(), &direct) < 1e-6);
}

#[test]
fn extra_momentum_rescales_the_couplings() {
    let toda = Toda::new(vec![1.0, 0.7]).unwrap();
    let lt = lift_toda(&toda).unwrap();
    let x0 = toda_state(3);
    let lifted = integrate_flow(lt.lift.system(), &lt.lift.lift_state(&x0, &[2.0, 2.0]).unwrap(), 10.0, &cfg(100)).unwrap();
    // g_i² → 4 g_i²
    let rescaled = Toda::new(vec![2.0, 1.4]).unwrap();
    let direct = integrate_flow(&rescaled.system(), &x0, 10.0, &cfg(100)).unwrap();
    let projected = lt.lift.project(&lifted, 1e-12).unwrap();
    assert!(max_state_gap(&projected, &direct) < 1e-6);
    assert!(projected.energy_drift.max_abs < 1e-8);
    // unequal extra momenta rescale bond by bond
    let lifted = integrate_flow(lt.lift.system(), &lt.lift.lift_state(&x0, &[0.5, 3.0]).unwrap(), 5.0, &cfg(50)).unwrap();
    let direct = integrate_flow(&Toda::new(vec![0.5, 2.1]).unwrap().system(), &x0, 5.0, &cfg(50)).unwrap();
    assert!(max_state_gap(&lt.lift.project(&lifted, 1e-12).unwrap(), &direct) < 1e-6);
}

fn lifted_toda_points(count: usize, seed: u64) -> Vec<PhasePoint> {
    let mut s = Sampler::new(seed);
    let qb = CoordBox::cube(5, 1.0);
    let pb = CoordBox::new(vec![-1.0, -1.0, -1.0, 0.5, 0.5], vec![1.0, 1.0, 1.0, 2.0, 2.0]).unwrap();
    s.phase_points(&qb, &pb, count, |_| true).unwrap()
}

#[test]
fn lifted_toda_lax_pair() {
    let toda = Toda::new(vec![1.0, 0.8]).unwrap();
    let lt = lift_toda(&toda).unwrap();
    for x in lifted_toda_points(10, 4) {
        assert!(lax_residual_at(&lt.lax, lt.lift.system(), &x).unwrap() < 1e-10);
        for (i, inv) in lt.invariants().iter().enumerate() {
            let v = inv.value(&x);
            let scaled = PhasePoint::new(x.q.clone(), x.p.iter().map(|p| 2.0 * p).collect()).unwrap();
            assert!((inv.value(&scaled) - v * f64::powi(2.0, i as i32 + 1)).abs() < 1e-12 * v.abs().max(1.0));
        }
    }
    let y0 = lt.lift.lift_state(&toda_state(3), &[1.2, 0.9]).unwrap();
    let traj = integrate_flow(lt.lift.system(), &y0, 20.0, &IntegratorConfig::default()).unwrap();
    assert!(spectral_drift(&lt.lax, &traj).unwrap().drift() < 1e-8);
}

#[test]
fn polarised_toda_tensors_are_killing() {
    let toda = Toda::new(vec![1.0, 0.8]).unwrap();
    let lt = lift_toda(&toda).unwrap();
    let metric = lt.lift.metric();
    for i in 1..=3 {
        let k = lt.killing_tensor(i).unwrap();
        for x in lifted_toda_points(5, 9) {
            let r = killing_tensor_residual(metric, &k, &x.q).unwrap().max_abs();
            assert!(r < 1e-7, "rank {i}: {r:e}");
        }
    }
    // I₂ = H/2, so the rank-2 tensor is ĝ^{-1}/4
    let k2 = lt.killing_tensor(2).unwrap();
    let x = [0.1, -0.3, 0.2, 0.0, 0.0];
    let ginv = metric.inverse(&x).unwrap();
    let c = k2.components(&x);
    for a in 0..5 {
        for b in 0..5 {
            assert!((c.get(&[a, b]) - 0.25 * ginv[(a, b)]).abs() < 1e-10);
        }
    }
    assert!(lt.killing_tensor(0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn null_data_lies_on_the_constraint_surface(
        q in prop::collection::vec(0.3f64..1.5, 3),
        p in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let kep = Kepler::new(1.0, 1.0).unwrap();
        let lift = null_lift(&kep.system()).unwrap();
        let y = lift.initial_data(&PhasePoint::new(q, p).unwrap()).unwrap();
        prop_assert!(lift.system().energy(&y).abs() < 1e-13);
    }

    #[test]
    fn scaling_grading_is_exact_on_polynomials(
        c in prop::collection::vec(-2.0f64..2.0, 4),
        q in -1.0f64..1.0,
        p in -2.0f64..2.0,
    ) {
        let coeffs = c.clone();
        let f = Observable::new("poly", Degree::Poly(3), 1, Poly(coeffs));
        let graded = grade_by_scaling(&f, 3).unwrap();
        let x = PhasePoint::new(vec![q], vec![p]).unwrap();
        for (deg, part) in graded.grading().unwrap() {
            let expect = c[*deg as usize] * (1.0 + q * q) * p.powi(*deg as i32);
            prop_assert!((part.value(&x) - expect).abs() < 1e-11);
        }
    }
}

/// `Σ c_i (1 + q²) p^i`
struct Poly(Vec<f64>);

impl hidsym::dynamics::PhaseFn for Poly {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let w = q[0] * q[0] + 1.0;
        let mut s = T::zero();
        for (i, &c) in self.0.iter().enumerate() {
            s += w * p[0].powi(i as i32) * c;
        }
        s
    }
}

#[test]
fn null_round_trip_on_every_natural_catalog_system() {
    let mut covered = 0;
    for name in hidsym::systems::PRESETS {
        let spec = hidsym::systems::preset(name).unwrap().build().unwrap();
        if spec.system.decomposition().is_err() {
            continue;
        }
        covered += 1;
        let x0 = spec.reference.clone().unwrap();
        let lift = null_lift(&spec.system).unwrap();
        let lifted = integrate_flow(lift.system(), &lift.initial_data(&x0).unwrap(), 10.0, &cfg(100)).unwrap();
        let direct = integrate_flow(&spec.system, &x0, 10.0, &cfg(100)).unwrap();
        let gap = max_state_gap(&lift.project(&lifted).unwrap(), &direct);
        assert!(gap < 1e-6, "{name}: {gap:e}");
    }
    // kepler, kepler-spherical, calogero, toda, two centres, three dots, oscillator
    assert_eq!(covered, 9);
}
