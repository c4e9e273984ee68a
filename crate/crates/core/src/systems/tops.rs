//! Heavy tops in Euler angles, phase coordinates `(φ, θ, ψ)`.

use crate::autodiff::Scalar;
use crate::dynamics::{Degree, HamiltonianSystem, Observable, PhaseFn, PhasePoint};
use crate::error::{Error, Result};
use crate::sampling::SINGULAR_MARGIN;

use super::{Parameter, SystemSpec};

/// Body-frame moment maps `(M₁, M₂, M₃)`.
pub fn moments<T: Scalar>(q: &[T], p: &[T]) -> [T; 3] {
    let (th, psi) = (q[1], q[2]);
    let (s, c) = (psi.sin(), psi.cos());
    let st = th.sin();
    let cot = th.cos() / st;
    let m1 = -s * p[1] + c / st * p[0] - c * cot * p[2];
    let m2 = c * p[1] + s / st * p[0] - s * cot * p[2];
    [m1, m2, p[2]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopKind {
    /// Goryachev–Chaplygin: `I₁ = I₂ = 4I₃`.
    GoryachevChaplygin,
    /// Kovalevskaya: `I₁ = I₂ = 2I₃`.
    Kovalevskaya,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Top {
    pub kind: TopKind,
    pub alpha: f64,
}

#[derive(Clone, Copy)]
enum Q {
    H,
    K,
    M(usize),
}

#[derive(Clone, Copy)]
struct TopFn {
    top: Top,
    q: Q,
}

impl PhaseFn for TopFn {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let [m1, m2, m3] = moments(q, p);
        let a2 = self.top.alpha * self.top.alpha;
        let (th, psi) = (q[1], q[2]);
        match (self.top.kind, self.q) {
            (_, Q::M(i)) => [m1, m2, m3][i],
            (TopKind::GoryachevChaplygin, Q::H) => (m1 * m1 + m2 * m2 + m3 * m3 * 4.0) * 0.5 + th.sin() * psi.sin() * a2,
            (TopKind::GoryachevChaplygin, Q::K) => m3 * (m1 * m1 + m2 * m2) - m2 * th.cos() * a2,
            (TopKind::Kovalevskaya, Q::H) => (m1 * m1 + m2 * m2 + m3 * m3 * 2.0) * 0.5 + th.sin() * psi.cos() * a2,
            (TopKind::Kovalevskaya, Q::K) => {
                let st = th.sin();
                let big_p = p[0] / st - th.cos() / st * p[2];
                // 2 Re[e^{iψ} (P + i p_θ)²]
                let (re, im) = (big_p * big_p - p[1] * p[1], big_p * p[1] * 2.0);
                let mixed = (psi.cos() * re - psi.sin() * im) * 2.0;
                let t = m1 * m1 + m2 * m2;
                t * t + st * st * (a2 * a2 * 4.0) - st * mixed * (2.0 * a2)
            }
        }
    }
}

impl Top {
    pub fn new(kind: TopKind, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Config(format!("top coupling must be finite, got {alpha}")));
        }
        Ok(Self { kind, alpha })
    }

    pub fn goryachev_chaplygin(alpha: f64) -> Result<Self> {
        Self::new(TopKind::GoryachevChaplygin, alpha)
    }

    pub fn kovalevskaya(alpha: f64) -> Result<Self> {
        Self::new(TopKind::Kovalevskaya, alpha)
    }

    fn label(&self) -> &'static str {
        match self.kind {
            TopKind::GoryachevChaplygin => "gc-top",
            TopKind::Kovalevskaya => "kovalevskaya",
        }
    }

    fn obs(&self, name: impl Into<String>, degree: Degree, q: Q) -> Observable {
        Observable::new(name, degree, 3, TopFn { top: *self, q })
    }

    pub fn system(&self) -> HamiltonianSystem {
        HamiltonianSystem::new(self.label(), self.obs("H", Degree::Poly(2), Q::H))
            .with_domain(|y| y[1].sin().abs() > SINGULAR_MARGIN)
    }

    pub fn moment(&self, i: usize) -> Observable {
        self.obs(format!("M{}", i + 1), Degree::Poly(1), Q::M(i))
    }

    /// The extra constant: cubic for Goryachev–Chaplygin (conserved on
    /// `p_φ = 0` only), quartic for Kovalevskaya.
    pub fn extra_constant(&self) -> Observable {
        match self.kind {
            TopKind::GoryachevChaplygin => self.obs("K_GC", Degree::Poly(3), Q::K),
            TopKind::Kovalevskaya => self.obs("K_K", Degree::Poly(4), Q::K),
        }
    }

    /// `α² p_φ M₁`, which the bracket `{H, K_GC}` equals.
    pub fn gc_anomaly(&self, x: &PhasePoint) -> f64 {
        self.alpha * self.alpha * x.p[0] * self.moment(0).value(x)
    }

    pub fn spec(&self) -> SystemSpec {
        let sys = self.system();
        let p_phi = match self.kind {
            TopKind::GoryachevChaplygin => 0.0,
            TopKind::Kovalevskaya => 0.3,
        };
        SystemSpec {
            name: self.label().into(),
            parameters: vec![Parameter::new("alpha", self.alpha, "gravity coupling")],
            invariants: vec![sys.h.clone(), self.extra_constant()],
            system: sys,
            lax: None,
            reference: PhasePoint::new(vec![0.0, 1.1, 0.4], vec![p_phi, 0.3, 0.5]).ok(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::poisson_bracket;

    #[test]
    fn moment_maps_close_on_so3() {
        let t = Top::kovalevskaya(1.0).unwrap();
        let x = PhasePoint::new(vec![0.3, 1.0, -0.7], vec![0.4, -0.2, 0.9]).unwrap();
        let [m1, m2, m3] = [0, 1, 2].map(|i| t.moment(i));
        let b = poisson_bracket(&m1, &m2, &x).unwrap();
        // body-frame generators close with a sign flip
        assert!((b.abs() - m3.value(&x).abs()).abs() < 1e-12);
        let k2 = m1.value(&x).powi(2) + m2.value(&x).powi(2);
        let expect = 0.2f64.powi(2) + (0.4 / 1f64.sin() - 0.9 / 1f64.tan()).powi(2);
        assert!((k2 - expect).abs() < 1e-12);
    }

    #[test]
    fn brackets_with_hamiltonian() {
        let x = PhasePoint::new(vec![0.3, 1.0, -0.7], vec![0.4, -0.2, 0.9]).unwrap();
        let gc = Top::goryachev_chaplygin(1.3).unwrap();
        let b = poisson_bracket(&gc.system().h, &gc.extra_constant(), &x).unwrap();
        assert!((b - gc.gc_anomaly(&x)).abs() < 1e-12);
        let kv = Top::kovalevskaya(0.8).unwrap();
        assert!(poisson_bracket(&kv.system().h, &kv.extra_constant(), &x).unwrap().abs() < 1e-11);
    }
}
