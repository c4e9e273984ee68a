use serde::{Deserialize, Serialize};

use super::integrate::Trajectory;
use super::phase::{Observable, PhasePoint};

/// Floor on the reference value in relative drift.
pub const DRIFT_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Deviation of `obs` from its initial value along `traj`.
pub fn conservation_drift(obs: &Observable, traj: &Trajectory) -> Drift {
    drift_of(|_, x| obs.value(x), traj)
}

/// Drift of an explicitly time-dependent quantity `f(t, x)`.
pub fn drift_of(f: impl Fn(f64, &PhasePoint) -> f64, traj: &Trajectory) -> Drift {
    drift_of_series(traj.times.iter().zip(&traj.states).map(|(&t, x)| f(t, x)))
}

/// Drift of a series of values against its first entry.
pub fn drift_of_series(values: impl IntoIterator<Item = f64>) -> Drift {
    let mut it = values.into_iter();
    let Some(v0) = it.next() else {
        return Drift::default();
    };
    let max_abs = it.fold(0.0f64, |m, v| if v.is_finite() { m.max((v - v0).abs()) } else { f64::INFINITY });
    Drift { max_abs, max_rel: max_abs / v0.abs().max(DRIFT_FLOOR) }
}

/// Least-squares slope of `values` against their index.
pub fn linear_trend(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = values.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_protects_vanishing_reference() {
        let d = drift_of_series([0.0, 1e-10, -3e-10]);
        assert_eq!(d.max_abs, 3e-10);
        assert!((d.max_rel - 3e-2).abs() < 1e-15);
        let d = drift_of_series([2.0, 2.5]);
        assert_eq!(d.max_rel, 0.25);
    }

    #[test]
    fn trend_of_line() {
        let v: Vec<f64> = (0..10).map(|i| 3.0 + 0.5 * i as f64).collect();
        assert!((linear_trend(&v) - 0.5).abs() < 1e-14);
    }
}
