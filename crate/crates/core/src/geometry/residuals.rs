use serde::Serialize;

use crate::dynamics::HamiltonianSystem;
use crate::error::{Error, Result};
use crate::linalg::{Mat, MultiIndex, Tensor};

use super::connection::{covariant_derivative, curvature};
use super::metric::MetricField;
use super::tensor::{KySquare, Position, Symmetry, TensorField};

/// Default threshold for the KY / closed-CKY flags.
pub const FLAG_TOL: f64 = 1e-8;

/// `∇_λ T_{a…}` with every slot lowered.
fn lowered_derivative(metric: &MetricField, t: &TensorField, x: &[f64]) -> Result<Tensor<f64>> {
    let d = covariant_derivative(metric, t, x)?;
    Ok(match t.position {
        Position::Lower => d,
        Position::Upper => {
            let g = metric.g(x);
            (1..=t.rank).fold(d, |acc, s| acc.transform_slot(s, &g))
        }
    })
}

fn all_slots(rank: usize) -> Vec<usize> {
    (0..rank).collect()
}

/// `∇_{(μ}K_{ν)}` at `x`.
pub fn killing_vector_residual(metric: &MetricField, k: &TensorField, x: &[f64]) -> Result<Mat<f64>> {
    if k.rank != 1 {
        return Err(Error::Type(format!("Killing vector residual needs rank 1, {} has rank {}", k.name, k.rank)));
    }
    let d = lowered_derivative(metric, k, x)?;
    let n = metric.dim;
    Ok(Mat::from_fn(n, n, |m, v| 0.5 * (d.get(&[m, v]) + d.get(&[v, m]))))
}

/// `∇^{(μ}K^{ρ₁…ρ_r)}` at `x`, all indices up.
pub fn killing_tensor_residual(metric: &MetricField, k: &TensorField, x: &[f64]) -> Result<Tensor<f64>> {
    if k.symmetry != Symmetry::Symmetric {
        return Err(Error::Type(format!("{} is not declared totally symmetric", k.name)));
    }
    let d = lowered_derivative(metric, k, x)?;
    let ginv = metric.inverse(x)?;
    Ok(d.symmetrize(&all_slots(k.rank + 1)).transform_all(&ginv))
}

/// `Φ` of a rank-1 or rank-2 conformal Killing tensor from divergence and trace,
/// as an upper-index array.
///
/// Rank 2 uses `Φ^b = (2∇_a K^{ab} + ∇^b K^a{}_a)/(n+2)`, the trace of the
/// defining equation; for traceless `K` this is `2/(n+2) ∇_a K^{ab}`.
pub fn conformal_factor(metric: &MetricField, k: &TensorField, x: &[f64]) -> Result<Tensor<f64>> {
    let n = metric.dim;
    let d = lowered_derivative(metric, k, x)?;
    let ginv = metric.inverse(x)?;
    match k.rank {
        1 => {
            let div: f64 = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| ginv[(a, b)] * d.get(&[a, b])).sum();
            Ok(Tensor::from_vec(n, 0, vec![div / n as f64]))
        }
        2 => {
            let g = metric.g(x);
            let up = d.transform_all(&ginv);
            let mut phi = vec![0.0; n];
            for (b, out) in phi.iter_mut().enumerate() {
                let mut div = 0.0;
                let mut grad_tr = 0.0;
                for a in 0..n {
                    for c in 0..n {
                        // ∇_a K^{ab} = g_{ac} ∇^c K^{ab}
                        div += g[(a, c)] * up.get(&[c, a, b]);
                        // ∇^b K^a_a = g_{ac} ∇^b K^{ac}
                        grad_tr += g[(a, c)] * up.get(&[b, a, c]);
                    }
                }
                *out = (2.0 * div + grad_tr) / (n as f64 + 2.0);
            }
            Ok(Tensor::from_vec(n, 1, phi))
        }
        r => Err(Error::Unsupported(format!("conformal factor of rank {r} must be supplied"))),
    }
}

/// `∇^{(μ}K^{ρ₁…ρ_r)} − g^{(μρ₁}Φ^{ρ₂…ρ_r)}` at `x`.
///
/// `phi` (upper indices, rank `r − 1`) is computed for `r ≤ 2` when absent.
pub fn conformal_killing_tensor_residual(
    metric: &MetricField,
    k: &TensorField,
    phi: Option<&TensorField>,
    x: &[f64],
) -> Result<Tensor<f64>> {
    let n = metric.dim;
    let r = k.rank;
    let lhs = killing_tensor_residual(metric, k, x)?;
    let phi = match phi {
        Some(p) => {
            if p.rank + 1 != r {
                return Err(Error::Type(format!("Φ must have rank {}, got {}", r - 1, p.rank)));
            }
            p.in_position(metric, Position::Upper).components(x)
        }
        None => conformal_factor(metric, k, x)?,
    };
    let ginv = metric.inverse(x)?;
    let mut gphi = Tensor::zeros(n, r + 1);
    for idx in MultiIndex::new(n, r + 1) {
        gphi.set(&idx, ginv[(idx[0], idx[1])] * phi.get(&idx[2..]));
    }
    Ok(lhs.sub(&gphi.symmetrize(&all_slots(r + 1))))
}

#[derive(Clone, Debug, Serialize)]
pub struct CkyReport {
    pub residual: Tensor<f64>,
    pub max_residual: f64,
    /// max |dh|
    pub dh_norm: f64,
    /// max |δh|
    pub codifferential_norm: f64,
    pub is_ky: bool,
    pub is_ccky: bool,
}

/// Residual of `∇_λh_{μ₁…μ_p} = ∇_{[λ}h_{μ₁…μ_p]} + (p/(n−p+1)) g_{λ[μ₁}∇^ρh_{|ρ|μ₂…μ_p]}`.
pub fn cky_residual(metric: &MetricField, h: &TensorField, x: &[f64]) -> Result<CkyReport> {
    cky_residual_with_tol(metric, h, x, FLAG_TOL)
}

pub fn cky_residual_with_tol(metric: &MetricField, h: &TensorField, x: &[f64], tol: f64) -> Result<CkyReport> {
    if h.symmetry != Symmetry::Antisymmetric && h.rank > 1 {
        return Err(Error::Type(format!("{} is not declared antisymmetric", h.name)));
    }
    let n = metric.dim;
    let p = h.rank;
    let d = lowered_derivative(metric, h, x)?;
    let exterior = d.antisymmetrize(&all_slots(p + 1));
    let g = metric.g(x);
    let ginv = metric.inverse(x)?;
    // ∇^ρ h_{ρ μ₂…μ_p}
    let mut div = Tensor::zeros(n, p - 1);
    for rest in MultiIndex::new(n, p - 1) {
        let mut s = 0.0;
        let mut idx = vec![0; p + 1];
        idx[2..].copy_from_slice(&rest);
        for l in 0..n {
            for rho in 0..n {
                idx[0] = l;
                idx[1] = rho;
                s += ginv[(l, rho)] * d.get(&idx);
            }
        }
        div.set(&rest, s);
    }
    let mut gdiv = Tensor::zeros(n, p + 1);
    for idx in MultiIndex::new(n, p + 1) {
        gdiv.set(&idx, g[(idx[0], idx[1])] * div.get(&idx[2..]));
    }
    let gdiv = gdiv.antisymmetrize(&(1..=p).collect::<Vec<_>>());
    let c = p as f64 / (n as f64 - p as f64 + 1.0);
    let residual = d.sub(&exterior).sub(&gdiv.scaled(c));
    let dh_norm = exterior.max_abs() * (p + 1) as f64;
    let codifferential_norm = div.max_abs();
    Ok(CkyReport {
        max_residual: residual.max_abs(),
        residual,
        dh_norm,
        codifferential_norm,
        is_ky: codifferential_norm <= tol,
        is_ccky: dh_norm <= tol,
    })
}

/// `K^{μν} = h^μ{}_{λ…}h^{νλ…}`.
pub fn ky_square(h: &TensorField, metric: &MetricField) -> TensorField {
    KySquare::field(h, metric)
}

/// `K^μ{}_λ R^{λν} − R^μ{}_λ K^{λν}` at `x`.
pub fn robertson_residual(metric: &MetricField, k: &TensorField, x: &[f64]) -> Result<Mat<f64>> {
    if k.rank != 2 || k.symmetry != Symmetry::Symmetric {
        return Err(Error::Type(format!("Robertson condition needs a symmetric rank-2 tensor, got {}", k.name)));
    }
    let n = metric.dim;
    let report = curvature(metric, x)?;
    let g = metric.g(x);
    let ginv = metric.inverse(x)?;
    let kup = Mat::from_vec(n, n, k.in_position(metric, Position::Upper).components(x).data);
    let rup = &(&ginv * &report.ricci) * &ginv;
    let a = &(&kup * &g) * &rup;
    let b = &(&rup * &g) * &kup;
    Ok(&a - &b)
}

/// Residuals of `{C, H} = 0` for `C = Σ_i (1/i!) T_(i)^{μ₁…μ_i} Π_{μ₁}…Π_{μ_i}`.
///
/// `tensors[i]` is `T_(i)` with upper indices. With `G = m g` (so that
/// `H = ½G^{μν}Π_μΠ_ν + V`), the entry `d` of the result is, lowered with `G`,
///
/// * `d = 0`: `T_(1)^ν ∂_νV`
/// * `d ≥ 1`: `∇_{(a₁}T_(d−1)a₂…a_d)` `− e T_(d)(a₁…^ν F_{a_d)ν}` `− (1/d) T_(d+1)a₁…a_d{}^ν ∂_νV`
///
/// for `d = 0 … m+1`, the last one being the Killing equation for `T_(m)`.
pub fn generalized_killing_residuals(
    system: &HamiltonianSystem,
    tensors: &[TensorField],
    x: &[f64],
) -> Result<Vec<Tensor<f64>>> {
    let dec = system.decomposition()?;
    let metric = &dec.metric;
    let n = metric.dim;
    let mass = dec.mass;
    for (i, t) in tensors.iter().enumerate() {
        if t.rank != i {
            return Err(Error::Type(format!("T_({i}) must have rank {i}, {} has rank {}", t.name, t.rank)));
        }
        if i > 1 && t.symmetry != Symmetry::Symmetric {
            return Err(Error::Type(format!("{} is not declared symmetric", t.name)));
        }
    }
    let m = tensors.len().saturating_sub(1);
    let up: Vec<TensorField> = tensors.iter().map(|t| t.in_position(metric, Position::Upper)).collect();
    let g = metric.g(x);
    let big_g = g.map(|v| v * mass);
    let dv = dec.potential_gradient(x);
    let f = dec.field_strength(x);
    let comps = |i: usize| -> Option<Tensor<f64>> { up.get(i).map(|t| t.components(x)) };
    // all slots but the last lowered with G
    let mixed = |t: &Tensor<f64>| (0..t.rank.saturating_sub(1)).fold(t.clone(), |acc, s| acc.transform_slot(s, &big_g));

    let mut out = Vec::with_capacity(m + 2);
    let t1 = comps(1);
    let level0: f64 = t1.map_or(0.0, |t| (0..n).map(|nu| t.data[nu] * dv[nu]).sum());
    out.push(Tensor::from_vec(n, 0, vec![level0]));

    for d in 1..=m + 1 {
        let mut res = Tensor::zeros(n, d);
        if let Some(t) = up.get(d - 1) {
            let dt = covariant_derivative(metric, t, x)?;
            let low = (1..d).fold(dt, |acc, s| acc.transform_slot(s, &big_g));
            res = low.symmetrize(&all_slots(d));
        }
        if let Some(td) = comps(d) {
            if dec.charge != 0.0 {
                let tm = mixed(&td);
                let mut tf = Tensor::zeros(n, d);
                for idx in MultiIndex::new(n, d) {
                    let mut s = 0.0;
                    let mut src = idx.clone();
                    for nu in 0..n {
                        src[d - 1] = nu;
                        s += tm.get(&src) * f[(idx[d - 1], nu)];
                    }
                    tf.set(&idx, s);
                }
                res = res.sub(&tf.symmetrize(&all_slots(d)).scaled(dec.charge));
            }
        }
        if let Some(tn) = comps(d + 1) {
            let tm = mixed(&tn);
            let mut tv = Tensor::zeros(n, d);
            for idx in MultiIndex::new(n, d) {
                let mut src = idx.clone();
                src.push(0);
                let mut s = 0.0;
                for nu in 0..n {
                    src[d] = nu;
                    s += tm.get(&src) * dv[nu];
                }
                tv.set(&idx, s);
            }
            res = res.sub(&tv.scaled(1.0 / d as f64));
        }
        out.push(res);
    }
    Ok(out)
}
