use serde::Serialize;

use crate::autodiff::{seed, Scalar};
use crate::dynamics::{HamiltonianSystem, NaturalDecomposition};
use crate::error::{Error, Result};
use crate::linalg::{Mat, MultiIndex, Tensor};

use super::metric::MetricField;
use super::tensor::{Position, TensorField};

/// `Γ^λ_{μν}` flattened as `[λ][μ][ν]`, generic so it can be differentiated.
pub fn christoffel_generic<T: Scalar>(metric: &MetricField, x: &[T]) -> Result<Vec<T>> {
    let n = metric.dim;
    let xv: Vec<f64> = x.iter().map(|v| v.value()).collect();
    metric.check_regular(&xv)?;
    let mut g = Mat::zeros(n, n);
    let mut dg = Vec::with_capacity(n);
    for rho in 0..n {
        let d = metric.g(&seed(x, rho));
        if rho == 0 {
            g = d.map(|v| v.re);
        }
        dg.push(d.map(|v| v.eps));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let ginv = g.inverse()?;
    let mut gamma = vec![T::zero(); n * n * n];
    for lam in 0..n {
        for mu in 0..n {
            for nu in mu..n {
                let mut s = T::zero();
                for rho in 0..n {
                    let c = dg[mu][(rho, nu)] + dg[nu][(rho, mu)] - dg[rho][(mu, nu)];
                    s += ginv[(lam, rho)] * c;
                }
                s = s * 0.5;
                gamma[lam * n * n + mu * n + nu] = s;
                gamma[lam * n * n + nu * n + mu] = s;
            }
        }
    }
    Ok(gamma)
}

/// Christoffel symbols at `x` as a rank-3 array indexed `(λ, μ, ν)`.
pub fn christoffel(metric: &MetricField, x: &[f64]) -> Result<Tensor<f64>> {
    Ok(Tensor::from_vec(metric.dim, 3, christoffel_generic(metric, x)?))
}

/// `∇_λ T_{…}` with the derivative index first and the other slots in the
/// position declared by `t`.
pub fn covariant_derivative<T: Scalar>(metric: &MetricField, t: &TensorField, x: &[T]) -> Result<Tensor<T>> {
    let n = t.dim;
    let r = t.rank;
    if n != metric.dim {
        return Err(Error::Type(format!("tensor {} has dimension {n}, metric {} has {}", t.name, metric.name, metric.dim)));
    }
    let gamma = christoffel_generic(metric, x)?;
    let gam = |l: usize, m: usize, k: usize| gamma[l * n * n + m * n + k];
    let mut comps = Tensor::zeros(n, r);
    let mut partials = Vec::with_capacity(n);
    for lam in 0..n {
        let d = t.components(&seed(x, lam));
        if lam == 0 {
            comps = Tensor::from_vec(n, r, d.data.iter().map(|v| v.re).collect());
        }
        partials.push(Tensor::from_vec(n, r, d.data.iter().map(|v| v.eps).collect()));
    }
    let mut out = Tensor::zeros(n, r + 1);
    let mut src = vec![0; r];
    for idx in MultiIndex::new(n, r + 1) {
        let lam = idx[0];
        let a = &idx[1..];
        let mut s = partials[lam].get(a);
        for k in 0..r {
            src.copy_from_slice(a);
            for sigma in 0..n {
                src[k] = sigma;
                let v = comps.get(&src);
                match t.position {
                    Position::Lower => s -= gam(sigma, lam, a[k]) * v,
                    Position::Upper => s += gam(a[k], lam, sigma) * v,
                }
            }
        }
        out.set(&idx, s);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    /// `Γ^λ_{μν}`
    pub christoffel: Tensor<f64>,
    /// `R^ρ_{σμν}`
    pub riemann: Tensor<f64>,
    /// `R_{σν} = R^ρ_{σρν}`
    pub ricci: Mat<f64>,
    pub scalar: f64,
}

impl CurvatureReport {
    /// Largest violations of `Γ^λ_{[μν]} = 0`, `R_{(ρσ)μν} = 0` and `R_{[μν]} = 0`.
    pub fn symmetry_defects(&self, metric: &MetricField, x: &[f64]) -> [f64; 3] {
        let n = self.ricci.rows;
        let g = metric.g(x);
        let mut d = [0.0f64; 3];
        for l in 0..n {
            for m in 0..n {
                for k in 0..n {
                    d[0] = d[0].max((self.christoffel.get(&[l, m, k]) - self.christoffel.get(&[l, k, m])).abs());
                }
            }
        }
        let lowered = self.riemann.transform_slot(0, &g);
        for idx in MultiIndex::new(n, 4) {
            let swapped = lowered.get(&[idx[1], idx[0], idx[2], idx[3]]);
            d[1] = d[1].max((lowered.get(&idx) + swapped).abs());
        }
        for i in 0..n {
            for j in 0..n {
                d[2] = d[2].max((self.ricci[(i, j)] - self.ricci[(j, i)]).abs());
            }
        }
        d
    }
}

/// Riemann, Ricci and scalar curvature from `∂Γ + ΓΓ`.
pub fn curvature(metric: &MetricField, x: &[f64]) -> Result<CurvatureReport> {
    let n = metric.dim;
    let gamma = christoffel_generic(metric, x)?;
    let dgamma: Vec<Vec<f64>> = (0..n)
        .map(|mu| christoffel_generic(metric, &seed(x, mu)).map(|v| v.iter().map(|d| d.eps).collect()))
        .collect::<Result<_>>()?;
    let gam = |l: usize, m: usize, k: usize| gamma[l * n * n + m * n + k];
    let dgam = |d: usize, l: usize, m: usize, k: usize| dgamma[d][l * n * n + m * n + k];
    let mut riemann = Tensor::zeros(n, 4);
    for idx in MultiIndex::new(n, 4) {
        let (rho, sigma, mu, nu) = (idx[0], idx[1], idx[2], idx[3]);
        let mut s = dgam(mu, rho, nu, sigma) - dgam(nu, rho, mu, sigma);
        for lam in 0..n {
            s += gam(rho, mu, lam) * gam(lam, nu, sigma) - gam(rho, nu, lam) * gam(lam, mu, sigma);
        }
        riemann.set(&idx, s);
    }
    let ricci = Mat::from_fn(n, n, |sigma, nu| (0..n).map(|rho| riemann.get(&[rho, sigma, rho, nu])).sum());
    let ginv = metric.inverse(x)?;
    let scalar = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| ginv[(a, b)] * ricci[(a, b)]).sum();
    Ok(CurvatureReport { christoffel: Tensor::from_vec(n, 3, gamma), riemann, ricci, scalar })
}

/// Free motion `H = (1/2m) g^{μν} p_μ p_ν` on the metric.
pub fn geodesic_system(metric: &MetricField, mass: f64) -> Result<HamiltonianSystem> {
    if !(mass > 0.0) {
        return Err(Error::Config(format!("geodesic mass must be positive, got {mass}")));
    }
    let n = metric.dim;
    let sys = HamiltonianSystem::natural(format!("geodesics of {}", metric.name), NaturalDecomposition::new(metric.clone(), mass));
    Ok(match metric.singular_locus().cloned() {
        Some(s) => sys.with_domain(move |y| !s(&y[..n])),
        None => sys,
    })
}
