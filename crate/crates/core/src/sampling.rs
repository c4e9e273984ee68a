//! Seeded sampling of configuration and phase-space points from coordinate boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::PhasePoint;
use crate::error::{Error, Result};
use crate::geometry::MetricField;

/// Distance to the singular locus below which points are rejected.
pub const SINGULAR_MARGIN: f64 = 1e-3;

/// Axis-aligned box `[lo_i, hi_i]` in coordinate space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CoordBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::Config(format!("box bounds have lengths {} and {}", lo.len(), hi.len())));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Config(format!("invalid box {lo:?} .. {hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        Self { lo: vec![-r; n], hi: vec![r; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| if a == b { a } else { rng.gen_range(a..b) })
            .collect()
    }
}

/// Deterministic point source; the same seed always yields the same sequence.
pub struct Sampler {
    rng: ChaCha8Rng,
    max_attempts: usize,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), max_attempts: 1000 }
    }

    /// Rejection budget per accepted point.
    pub fn with_max_attempts(mut self, attempts: usize) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            lo
        } else {
            self.rng.gen_range(lo..hi)
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// `count` points of `bx` for which `accept` holds.
    pub fn points(&mut self, bx: &CoordBox, count: usize, accept: impl Fn(&[f64]) -> bool) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            if attempts >= self.max_attempts * count.max(1) {
                return Err(Error::Degenerate(format!(
                    "only {} of {count} points accepted after {attempts} draws from {bx:?}",
                    out.len()
                )));
            }
            attempts += 1;
            let x = bx.draw(&mut self.rng);
            if accept(&x) {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// Regular points of `metric`, off its singular locus.
    pub fn regular_points(&mut self, metric: &MetricField, bx: &CoordBox, count: usize) -> Result<Vec<Vec<f64>>> {
        self.points(bx, count, |x| metric.check_regular(x).is_ok())
    }

    /// Phase points with `q` from `qbox`, `p` from `pbox`, kept when `accept(q, p)`.
    pub fn phase_points(
        &mut self,
        qbox: &CoordBox,
        pbox: &CoordBox,
        count: usize,
        accept: impl Fn(&PhasePoint) -> bool,
    ) -> Result<Vec<PhasePoint>> {
        if qbox.dim() != pbox.dim() {
            return Err(Error::Config(format!("q box has dimension {}, p box {}", qbox.dim(), pbox.dim())));
        }
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            if attempts >= self.max_attempts * count.max(1) {
                return Err(Error::Degenerate(format!("only {} of {count} phase points accepted", out.len())));
            }
            attempts += 1;
            let x = PhasePoint::new(qbox.draw(&mut self.rng), pbox.draw(&mut self.rng))?;
            if accept(&x) {
                out.push(x);
            }
        }
        Ok(out)
    }
}

/// True when two of the `x_μ²` are closer than `tol`.
pub fn coincident_squares(x: &[f64], tol: f64) -> bool {
    x.iter().enumerate().any(|(i, a)| x[..i].iter().any(|b| (a * a - b * b).abs() < tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let b = CoordBox::cube(3, 2.0);
        let a = Sampler::new(7).points(&b, 20, |_| true).unwrap();
        let c = Sampler::new(7).points(&b, 20, |_| true).unwrap();
        assert_eq!(a, c);
        assert!(a.iter().all(|x| b.contains(x)));
        assert_ne!(a, Sampler::new(8).points(&b, 20, |_| true).unwrap());
    }

    #[test]
    fn rejection_and_exhaustion() {
        let b = CoordBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let pts = Sampler::new(1).points(&b, 50, |x| x[0] > 0.5).unwrap();
        assert!(pts.iter().all(|x| x[0] > 0.5));
        let r = Sampler::new(1).with_max_attempts(5).points(&b, 3, |_| false);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn sphere_poles_are_avoided() {
        let s = MetricField::sphere2(1.0);
        let b = CoordBox::new(vec![0.0, 0.0], vec![0.01, 1.0]).unwrap();
        let pts = Sampler::new(3).regular_points(&s, &b, 30).unwrap();
        assert!(pts.iter().all(|x| x[0].sin().abs() >= SINGULAR_MARGIN));
    }

    #[test]
    fn coincident_square_detection() {
        assert!(coincident_squares(&[0.5, -0.5002], 1e-3));
        assert!(!coincident_squares(&[0.3, 0.8], 1e-3));
        assert!(!coincident_squares(&[0.3], 1e-3));
    }

    #[test]
    fn bad_boxes_are_config_errors() {
        assert!(CoordBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(CoordBox::new(vec![], vec![]).is_err());
        assert!(CoordBox::new(vec![0.0], vec![f64::NAN]).is_err());
    }
}
