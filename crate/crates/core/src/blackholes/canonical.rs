use std::sync::Arc;

use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{HamiltonianSystem, Observable};
use crate::error::{Error, Result};
use crate::geometry::{
    covariant_derivative, geodesic_system, momentum_polynomial, HodgeDual, KySquare, MetricField, Position, Signature,
    Symmetry, TensorField, Wedge,
};
use crate::linalg::{factorial, Mat};
use crate::sampling::{coincident_squares, CoordBox, Sampler, SINGULAR_MARGIN};

use super::{symmetric_polys_generic, CanonicalParams};

/// Canonical metric in coordinates `(x_1 … x_N, ψ_0 … ψ_{N−1+ε})`.
#[derive(Clone, Debug)]
pub struct Canonical {
    params: Arc<CanonicalParams>,
}

#[derive(Clone, Copy)]
enum Kind {
    Metric,
    Tower(usize),
    Pcky,
    Potential,
}

struct CanonicalFn {
    p: Arc<CanonicalParams>,
    kind: Kind,
}

/// Per-point quantities shared by every field.
struct Pieces<T> {
    q: Vec<T>,
    a: Vec<T>,
    a_mu: Vec<Vec<T>>,
    s: T,
}

fn pieces<T: Scalar>(p: &CanonicalParams, x: &[T]) -> Pieces<T> {
    let n = p.n_half;
    let sp = symmetric_polys_generic(&x[..n]);
    let q = (0..n).map(|mu| p.x_fn(mu, x[mu]) / sp.u[mu]).collect();
    let s = if p.epsilon == 1 { -(sp.a[n].recip() * p.c) } else { T::zero() };
    Pieces { q, a: sp.a, a_mu: sp.a_mu, s }
}

impl CanonicalFn {
    /// Lower-index `Σ_μ w_μ (dx_μ²/Q_μ + Q_μ (Σ A^{(j)}_μ dψ_j)²) + ε w_0 S (Σ A^{(j)} dψ_j)²`.
    fn quadratic<T: Scalar>(&self, x: &[T], j: usize) -> Vec<T> {
        let p = &self.p;
        let n = p.n_half;
        let d = p.dim();
        let k = d - n;
        let pc = pieces(p, x);
        let mut g = vec![T::zero(); d * d];
        for mu in 0..n {
            let w = pc.a_mu[mu][j];
            g[mu * d + mu] = w / pc.q[mu];
            for r in 0..k {
                for c in 0..k {
                    let ar = if r < n { pc.a_mu[mu][r] } else { T::zero() };
                    let ac = if c < n { pc.a_mu[mu][c] } else { T::zero() };
                    g[(n + r) * d + n + c] += w * pc.q[mu] * ar * ac;
                }
            }
        }
        if p.epsilon == 1 {
            let w = pc.a[j] * pc.s;
            for r in 0..k {
                for c in 0..k {
                    g[(n + r) * d + n + c] += w * pc.a[r] * pc.a[c];
                }
            }
        }
        g
    }
}

impl FieldFn for CanonicalFn {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let p = &self.p;
        let n = p.n_half;
        let d = p.dim();
        let k = d - n;
        match self.kind {
            Kind::Metric => self.quadratic(x, 0),
            Kind::Tower(j) => self.quadratic(x, j),
            Kind::Pcky => {
                let sp = symmetric_polys_generic(&x[..n]);
                let mut h = vec![T::zero(); d * d];
                for mu in 0..n {
                    for j in 0..k.min(n) {
                        let v = x[mu] * sp.a_mu[mu][j];
                        h[mu * d + n + j] = v;
                        h[(n + j) * d + mu] = -v;
                    }
                }
                h
            }
            Kind::Potential => {
                let sp = symmetric_polys_generic(&x[..n]);
                let mut b = vec![T::zero(); d];
                for j in 0..k.min(n) {
                    b[n + j] = sp.a[j + 1] * 0.5;
                }
                b
            }
        }
    }
}

/// Constant coordinate vector `∂_i` in dimension `d`.
struct Coordinate(usize, usize);

impl FieldFn for Coordinate {
    fn eval<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        let mut v = vec![T::zero(); self.0];
        v[self.1] = T::one();
        v
    }
}

/// `ξ^a = (1/(n−1)) ∇_b h^{ba}`.
struct Primary {
    metric: MetricField,
    h_up: TensorField,
}

impl FieldFn for Primary {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = self.metric.dim;
        let Ok(dh) = covariant_derivative(&self.metric, &self.h_up, x) else {
            return vec![T::cst(f64::NAN); n];
        };
        (0..n)
            .map(|a| (0..n).fold(T::zero(), |s, b| s + dh.get(&[b, b, a])) / (n as f64 - 1.0))
            .collect()
    }
}

/// `K^a{}_b ξ^b` for an upper-index rank-2 `K` and lower-index metric.
struct Contracted {
    metric: MetricField,
    k_up: TensorField,
    xi: TensorField,
}

impl FieldFn for Contracted {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = self.metric.dim;
        let k = Mat::from_vec(n, n, self.k_up.components(x).data);
        let g = self.metric.g(x);
        let xi_low = g.matvec(&self.xi.components(x).data);
        k.matvec(&xi_low)
    }
}

struct Scaled(TensorField, f64);

impl FieldFn for Scaled {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.0.components(x).data.into_iter().map(|v| v * self.1).collect()
    }
}

impl Canonical {
    pub fn new(params: CanonicalParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params: Arc::new(params) })
    }

    pub fn params(&self) -> &CanonicalParams {
        &self.params
    }

    pub fn n_half(&self) -> usize {
        self.params.n_half
    }

    pub fn epsilon(&self) -> usize {
        self.params.epsilon as usize
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    /// Number of angles `ψ_k`, `N + ε`.
    pub fn angles(&self) -> usize {
        self.n_half() + self.epsilon()
    }

    fn field(&self, kind: Kind) -> CanonicalFn {
        CanonicalFn { p: self.params.clone(), kind }
    }

    /// Coincident `x_μ²`, vanishing `X_μ`, or vanishing `A^{(N)}` when `ε = 1`.
    pub fn is_singular(&self, x: &[f64]) -> bool {
        let n = self.n_half();
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return true;
        }
        if coincident_squares(&x[..n], SINGULAR_MARGIN) {
            return true;
        }
        if (0..n).any(|mu| self.params.x_fn(mu, x[mu]).abs() < SINGULAR_MARGIN) {
            return true;
        }
        self.epsilon() == 1 && x[..n].iter().map(|v| v * v).product::<f64>().abs() < SINGULAR_MARGIN
    }

    /// `Q_μ` at `x`, and `S` (zero for even dimensions).
    pub fn q_and_s(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let pc = pieces(&self.params, x);
        (pc.q, pc.s)
    }

    /// Regular point of the Riemannian patch: every `Q_μ > 0` and `S > 0` when `ε = 1`.
    pub fn in_patch(&self, x: &[f64]) -> bool {
        if self.is_singular(x) {
            return false;
        }
        let (q, s) = self.q_and_s(x);
        q.iter().all(|&v| v > 0.0) && (self.epsilon() == 0 || s > 0.0)
    }

    pub fn metric(&self) -> MetricField {
        let me = self.clone();
        MetricField::new(format!("canonical-{}d", self.dim()), self.dim(), Signature::Riemannian, self.field(Kind::Metric))
            .with_singular_locus(move |x| me.is_singular(x))
    }

    /// Orthonormal legs as rows `E^a{}_μ`, ordered `E^1, E^1̂, …, E^N, E^N̂, E^0`.
    pub fn frame(&self, x: &[f64]) -> Result<Mat<f64>> {
        if !self.in_patch(x) {
            return Err(Error::Degenerate(format!("frame needs Q_μ > 0 and S > 0, violated at {x:?}")));
        }
        let n = self.n_half();
        let d = self.dim();
        let pc = pieces(&self.params, x);
        let mut e = Mat::zeros(d, d);
        for mu in 0..n {
            let sq = pc.q[mu].sqrt();
            e[(2 * mu, mu)] = 1.0 / sq;
            for j in 0..n {
                e[(2 * mu + 1, n + j)] = sq * pc.a_mu[mu][j];
            }
        }
        if self.epsilon() == 1 {
            let ss = pc.s.sqrt();
            for j in 0..=n {
                e[(d - 1, n + j)] = ss * pc.a[j];
            }
        }
        Ok(e)
    }

    /// Closed form of `h = db`, lower indices.
    pub fn pcky(&self) -> TensorField {
        TensorField::new("h", self.dim(), 2, Symmetry::Antisymmetric, Position::Lower, self.field(Kind::Pcky))
    }

    /// `b = ½ Σ_j A^{(j+1)} dψ_j`.
    pub fn pcky_potential(&self) -> TensorField {
        TensorField::new("b", self.dim(), 1, Symmetry::None, Position::Lower, self.field(Kind::Potential))
    }

    /// `h^{∧j}/j!`, lower indices.
    pub fn pcky_power(&self, j: usize) -> Result<TensorField> {
        if j == 0 || 2 * j > self.dim() {
            return Err(Error::InvalidIndex(format!("wedge power {j} of h out of range in dimension {}", self.dim())));
        }
        let h = self.pcky();
        let mut w = h.clone();
        for _ in 1..j {
            w = Wedge::field(&w, &h);
        }
        let name = format!("h^{j}");
        Ok(TensorField::new(name, self.dim(), 2 * j, Symmetry::Antisymmetric, Position::Lower, Scaled(w, 1.0 / factorial(j))))
    }

    /// Killing tensor `K^{(j)}` from the frame formula, lower indices.
    pub fn tower(&self, j: usize) -> Result<TensorField> {
        if j >= self.n_half() {
            return Err(Error::InvalidIndex(format!("tower index {j} out of range 0..{}", self.n_half())));
        }
        Ok(TensorField::new(format!("K{j}"), self.dim(), 2, Symmetry::Symmetric, Position::Lower, self.field(Kind::Tower(j))))
    }

    /// `K^{(j)}` through the Hodge dual of `h^{∧j}/j!`, upper indices; only for `N ≤ 2`.
    pub fn tower_from_dual(&self, j: usize) -> Result<TensorField> {
        if self.n_half() > 2 {
            return Err(Error::Unsupported("the Hodge-dual tower is only built for N ≤ 2".into()));
        }
        if j == 0 || j >= self.n_half() {
            return Err(Error::InvalidIndex(format!("dual tower index {j} out of range 1..{}", self.n_half())));
        }
        let metric = self.metric();
        let f = HodgeDual::field(&self.pcky_power(j)?, &metric);
        let norm = 1.0 / factorial(f.rank - 1);
        let sq = KySquare::field(&f, &metric);
        Ok(TensorField::new(format!("*K{j}"), self.dim(), 2, Symmetry::Symmetric, Position::Upper, Scaled(sq, norm)))
    }

    /// Coordinate field `∂_{ψ_k}`, upper index.
    pub fn angle_vector(&self, k: usize) -> Result<TensorField> {
        if k >= self.angles() {
            return Err(Error::InvalidIndex(format!("angle ψ_{k} out of range 0..{}", self.angles())));
        }
        let d = self.dim();
        Ok(TensorField::new(format!("d_psi{k}"), d, 1, Symmetry::None, Position::Upper, Coordinate(d, self.n_half() + k)))
    }

    /// `ξ^a = (1/(n−1)) ∇_b h^{ba}`, computed from the connection.
    pub fn primary_killing_vector(&self) -> TensorField {
        let metric = self.metric();
        let h_up = self.pcky().in_position(&metric, Position::Upper);
        TensorField::new("xi", self.dim(), 1, Symmetry::None, Position::Upper, Primary { metric, h_up })
    }

    /// `K^{(j)a}{}_b ξ^b`, which reproduces `∂_{ψ_j}`.
    pub fn secondary_from_tower(&self, j: usize) -> Result<TensorField> {
        let metric = self.metric();
        let k_up = self.tower(j)?.in_position(&metric, Position::Upper);
        let xi = self.primary_killing_vector();
        Ok(TensorField::new(format!("K{j}.xi"), self.dim(), 1, Symmetry::None, Position::Upper, Contracted { metric, k_up, xi }))
    }

    /// Unit-mass geodesic flow restricted to the Riemannian patch.
    pub fn geodesic_system(&self) -> Result<HamiltonianSystem> {
        let me = self.clone();
        let n = self.dim();
        Ok(geodesic_system(&self.metric(), 1.0)?.with_domain(move |y| me.in_patch(&y[..n])))
    }

    /// `p_{ψ_k}` for `k = 0..N+ε` followed by `K^{(j)ab} p_a p_b` for `j = 0..N`.
    pub fn geodesic_invariants(&self) -> Result<Vec<Observable>> {
        let d = self.dim();
        let n = self.n_half();
        let metric = self.metric();
        let mut out: Vec<Observable> =
            (0..self.angles()).map(|k| Observable::coordinate(d, n + k, true).with_name(format!("p_psi{k}"))).collect();
        for j in 0..n {
            let k = self.tower(j)?.in_position(&metric, Position::Upper);
            out.push(momentum_polynomial(&k).with_name(format!("K{j}")));
        }
        Ok(out)
    }

    /// `count` patch points drawn from `bx`.
    pub fn sample(&self, sampler: &mut Sampler, bx: &CoordBox, count: usize) -> Result<Vec<Vec<f64>>> {
        if bx.dim() != self.dim() {
            return Err(Error::Config(format!("sampling box has dimension {}, metric has {}", bx.dim(), self.dim())));
        }
        sampler.points(bx, count, |x| self.in_patch(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackholes::kerr_nut_ads_4d;
    use crate::geometry::{cky_residual, killing_tensor_residual, killing_vector_residual, ExteriorDerivative};

    fn preset() -> (Canonical, Vec<Vec<f64>>) {
        let (p, bx) = kerr_nut_ads_4d();
        let c = Canonical::new(p).unwrap();
        let pts = c.sample(&mut Sampler::new(7), &bx, 5).unwrap();
        (c, pts)
    }

    #[test]
    fn two_dimensional_collapse() {
        let c = Canonical::new(CanonicalParams::new(1, 0, 0.0, vec![0.0, 1.0], vec![-0.4]).unwrap()).unwrap();
        let x = [0.7, 0.2];
        let big_x = 0.49 + 0.8 * 0.7;
        let g = c.metric().g(&x);
        assert!((g[(0, 0)] - 1.0 / big_x).abs() < 1e-14);
        assert!((g[(1, 1)] - big_x).abs() < 1e-14);
        assert_eq!(g[(0, 1)], 0.0);
        let h = c.pcky().components(&x[..]);
        assert!((h.get(&[0, 1]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn determinant_closed_form() {
        // det g = Π_μ Q_μ⁻¹ · Π_μ Q_μ · det(A^{(j)}_μ)² = (x₂² − x₁²)²
        let (c, pts) = preset();
        for x in &pts {
            let g = c.metric().g(x);
            let v = x[1] * x[1] - x[0] * x[0];
            assert!((g.determinant() - v * v).abs() < 1e-10 * v * v);
        }
    }

    #[test]
    fn frame_reconstruction_and_pcky_form() {
        let (c, pts) = preset();
        for x in &pts {
            let e = c.frame(x).unwrap();
            let g = c.metric().g(x);
            let rebuilt = &e.transpose() * &e;
            assert!((&rebuilt - &g).max_abs() < 1e-10);
            // h = Σ x_μ E^μ ∧ E^μ̂
            let h = c.pcky().components(&x[..]);
            for a in 0..4 {
                for b in 0..4 {
                    let mut s = 0.0;
                    for mu in 0..2 {
                        s += x[mu] * (e[(2 * mu, a)] * e[(2 * mu + 1, b)] - e[(2 * mu, b)] * e[(2 * mu + 1, a)]);
                    }
                    assert!((h.get(&[a, b]) - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pcky_is_closed_potential_exact() {
        let (c, pts) = preset();
        let db = ExteriorDerivative::field(&c.pcky_potential());
        let dh = ExteriorDerivative::field(&c.pcky());
        for x in &pts {
            assert!(db.components(&x[..]).sub(&c.pcky().components(&x[..])).max_abs() < 1e-13);
            assert!(dh.components(&x[..]).max_abs() < 1e-12);
            let r = cky_residual(&c.metric(), &c.pcky(), x).unwrap();
            assert!(r.max_residual < 1e-8 && r.is_ccky, "{}", r.max_residual);
        }
    }

    #[test]
    fn tower_and_killing_vectors() {
        let (c, pts) = preset();
        let m = c.metric();
        let k0 = c.tower(0).unwrap();
        let k1 = c.tower(1).unwrap();
        let xi = c.primary_killing_vector();
        for x in &pts {
            assert_eq!(k0.components(&x[..]).data, m.g(&x[..]).data);
            assert!(killing_tensor_residual(&m, &k1, x).unwrap().max_abs() < 1e-8);
            for k in 0..2 {
                assert!(killing_vector_residual(&m, &c.angle_vector(k).unwrap(), x).unwrap().max_abs() < 1e-9);
            }
            let v = xi.components(&x[..]).data;
            assert!((v[2] - 1.0).abs() < 1e-8 && v[0].abs() + v[1].abs() + v[3].abs() < 1e-8, "{v:?}");
            let w = c.secondary_from_tower(1).unwrap().components(&x[..]).data;
            assert!((w[3] - 1.0).abs() < 1e-8 && w[0].abs() + w[1].abs() + w[2].abs() < 1e-8, "{w:?}");
        }
        assert!(c.tower(2).is_err());
    }

    #[test]
    fn geodesic_invariant_count() {
        let (c, pts) = preset();
        let inv = c.geodesic_invariants().unwrap();
        assert_eq!(inv.len(), 4);
        let sys = c.geodesic_system().unwrap();
        let x = crate::dynamics::PhasePoint::new(pts[0].clone(), vec![0.3, -0.2, 0.5, 0.1]).unwrap();
        assert!((inv[2].value(&x) - 2.0 * sys.energy(&x)).abs() < 1e-12);
    }
}
