//! Canonical Kerr-NUT-(A)dS metrics, their principal tensor and the towers
//! of Killing objects generated from it.

mod canonical;

use serde::{Deserialize, Serialize};

use crate::autodiff::{DynField, Scalar};
use crate::error::{Error, Result};
use crate::sampling::{coincident_squares, CoordBox, SINGULAR_MARGIN};

pub use canonical::Canonical;

/// Elementary symmetric polynomials `e_0 … e_m` of `v`.
pub fn elementary<T: Scalar>(v: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); v.len() + 1];
    e[0] = T::one();
    for (i, &x) in v.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            let prev = e[k - 1];
            e[k] += prev * x;
        }
    }
    e
}

/// `A^{(k)}`, `A^{(k)}_μ` and `U_μ` built from the squares `x_ν²`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricPolys<T> {
    /// `A^{(k)}`, `k = 0..=N`
    pub a: Vec<T>,
    /// `A^{(k)}_μ` indexed `[μ][k]`, `k = 0..=N−1`
    pub a_mu: Vec<Vec<T>>,
    /// `U_μ = Π_{ν≠μ}(x_ν² − x_μ²)`
    pub u: Vec<T>,
}

pub(crate) fn symmetric_polys_generic<T: Scalar>(x: &[T]) -> SymmetricPolys<T> {
    let sq: Vec<T> = x.iter().map(|&v| v * v).collect();
    let n = x.len();
    let mut a_mu = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for mu in 0..n {
        let others: Vec<T> = (0..n).filter(|&nu| nu != mu).map(|nu| sq[nu]).collect();
        a_mu.push(elementary(&others));
        u.push(others.iter().fold(T::one(), |p, &s| p * (s - sq[mu])));
    }
    SymmetricPolys { a: elementary(&sq), a_mu, u }
}

/// Symmetric polynomials at a point; coincident squares are refused.
pub fn symmetric_polys(x: &[f64]) -> Result<SymmetricPolys<f64>> {
    if coincident_squares(x, SINGULAR_MARGIN) {
        return Err(Error::Degenerate(format!("coordinates {x:?} have coincident squares")));
    }
    Ok(symmetric_polys_generic(x))
}

/// Parameters of the canonical metric in `n = 2N + ε` dimensions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalParams {
    /// `N`
    pub n_half: usize,
    /// `ε ∈ {0, 1}`
    #[serde(default)]
    pub epsilon: u8,
    /// `c`, only for odd dimensions
    #[serde(default)]
    pub c: f64,
    /// `c_k` for `k = ε..=N`
    pub c_k: Vec<f64>,
    /// `b_μ`, `μ = 1..=N`
    pub b: Vec<f64>,
    /// Per-μ replacement `x ↦ X_μ(x)` for off-shell metrics.
    #[serde(skip)]
    pub off_shell: Option<Vec<DynField>>,
}

impl CanonicalParams {
    pub fn new(n_half: usize, epsilon: u8, c: f64, c_k: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let p = Self { n_half, epsilon, c, c_k, b, off_shell: None };
        p.validate()?;
        Ok(p)
    }

    /// Replace the polynomial `X_μ` by arbitrary one-variable functions.
    pub fn with_off_shell(mut self, x_fns: Vec<DynField>) -> Result<Self> {
        if x_fns.len() != self.n_half {
            return Err(Error::Config(format!("off-shell metric needs {} functions, got {}", self.n_half, x_fns.len())));
        }
        self.off_shell = Some(x_fns);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, e) = (self.n_half, self.epsilon as usize);
        if n == 0 || e > 1 {
            return Err(Error::Config(format!("canonical metric needs N ≥ 1 and ε ∈ {{0, 1}}, got N = {n}, ε = {e}")));
        }
        if self.c_k.len() != n + 1 - e {
            return Err(Error::Config(format!("expected {} coefficients c_k for k = {e}..={n}, got {}", n + 1 - e, self.c_k.len())));
        }
        if self.b.len() != n {
            return Err(Error::Config(format!("expected {n} parameters b_μ, got {}", self.b.len())));
        }
        if e == 0 && self.c != 0.0 {
            return Err(Error::Config("the c/x² term only exists in odd dimensions".into()));
        }
        if self.c_k.iter().chain(&self.b).chain([&self.c]).any(|v| !v.is_finite()) {
            return Err(Error::Config("canonical metric parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.n_half + self.epsilon as usize
    }

    /// `X_μ(x) = Σ_{k=ε}^N c_k x^{2k} − 2b_μ x^{1−ε} + εc/x²`, or the off-shell override.
    pub fn x_fn<T: Scalar>(&self, mu: usize, x: T) -> T {
        if let Some(f) = &self.off_shell {
            return f[mu].eval(&[x])[0];
        }
        let e = self.epsilon as i32;
        let mut s = T::zero();
        for (i, &c) in self.c_k.iter().enumerate() {
            s += x.powi(2 * (i as i32 + e)) * c;
        }
        s -= x.powi(1 - e) * (2.0 * self.b[mu]);
        if e == 1 {
            s += (x * x).recip() * self.c;
        }
        s
    }
}

/// Four-dimensional Kerr-NUT-AdS preset with a Riemannian sampling box.
///
/// `X₁ = x⁴ − 0.6x` is positive for `x₁ < 0` and `X₂ = x⁴ − x` negative on
/// `(0, 1)`, so with `U₁ > 0 > U₂` both `Q_μ` are positive in the box.
pub fn kerr_nut_ads_4d() -> (CanonicalParams, CoordBox) {
    let p = CanonicalParams::new(2, 0, 0.0, vec![0.0, 0.0, 1.0], vec![0.3, 0.5]).expect("preset parameters are valid");
    let tau = std::f64::consts::TAU;
    let bx = CoordBox::new(vec![-0.5, 0.6, 0.0, 0.0], vec![-0.2, 0.95, tau, tau]).expect("preset box is valid");
    (p, bx)
}

pub const PRESETS: &[&str] = &["kerr-nut-ads-4d"];

pub fn preset(name: &str) -> Result<(CanonicalParams, CoordBox)> {
    match name {
        "kerr-nut-ads-4d" => Ok(kerr_nut_ads_4d()),
        other => Err(Error::Config(format!("unknown metric preset '{other}'; known presets: {}", PRESETS.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_polynomials() {
        let s = symmetric_polys(&[1.0, 2.0]).unwrap();
        assert_eq!(s.a, vec![1.0, 5.0, 4.0]);
        assert_eq!(s.a_mu[0], vec![1.0, 4.0]);
        assert_eq!(s.a_mu[1], vec![1.0, 1.0]);
        assert_eq!(s.u, vec![3.0, -3.0]);
        assert!(symmetric_polys(&[0.5, -0.5]).is_err());
    }

    #[test]
    fn elementary_against_subset_sums() {
        let v = [0.3, -1.2, 2.5, 0.7];
        let e = elementary(&v);
        for k in 0..=v.len() {
            let mut brute = 0.0;
            for mask in 0u32..(1 << v.len()) {
                if mask.count_ones() as usize == k {
                    brute += (0..v.len()).filter(|i| mask & (1 << i) != 0).map(|i| v[i]).product::<f64>();
                }
            }
            assert!((e[k] - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(CanonicalParams::new(2, 0, 0.0, vec![0.0, 1.0], vec![0.3, 0.5]).is_err());
        assert!(CanonicalParams::new(2, 0, 1.0, vec![0.0, 0.0, 1.0], vec![0.3, 0.5]).is_err());
        assert!(CanonicalParams::new(1, 1, 0.2, vec![1.0], vec![0.1]).is_ok());
        assert!(preset("kerr").is_err());
    }

    #[test]
    fn preset_polynomials() {
        let (p, _) = kerr_nut_ads_4d();
        assert!((p.x_fn(0, 0.5f64) - (0.0625 - 0.3)).abs() < 1e-15);
        assert!((p.x_fn(1, 2.0f64) - (16.0 - 2.0)).abs() < 1e-15);
    }
}
