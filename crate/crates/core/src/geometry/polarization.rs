use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{FieldFn, Scalar};
use crate::dynamics::{Degree, Observable, PhaseFn};
use crate::error::{Error, Result};
use crate::linalg::{binomial, factorial, MultiIndex, Tensor};

use super::tensor::{Position, Symmetry, TensorField};

/// `C_K = K^{μ₁…μ_r}(q) p_{μ₁}…p_{μ_r}` for an upper-index symmetric `K`.
pub fn momentum_polynomial(k: &TensorField) -> Observable {
    Observable::new(format!("C[{}]", k.name), Degree::Poly(k.rank as u32), k.dim, MomentumPolynomial(k.clone()))
}

struct MomentumPolynomial(TensorField);

impl PhaseFn for MomentumPolynomial {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let t = self.0.components(q);
        let mut s = T::zero();
        for (idx, c) in MultiIndex::new(t.dim, t.rank).zip(&t.data) {
            let mut term = *c;
            for &i in &idx {
                term *= p[i];
            }
            s += term;
        }
        s
    }
}

const PROBE_SEED: u64 = 0x5eed_0f_9a1a;

/// Symmetric tensor recovered from a function homogeneous of degree `r` in
/// the momenta, by least squares over fixed momentum probes.
///
/// The pseudo-inverse depends only on the probes, so the components are a
/// fixed linear map of function values and stay differentiable in `q`.
#[derive(Clone)]
pub struct Polarization {
    n: usize,
    rank: usize,
    probes: Arc<Vec<Vec<f64>>>,
    monomials: Arc<Vec<Vec<usize>>>,
    /// `pinv[α][k]`
    pinv: Arc<Vec<Vec<f64>>>,
    design: Arc<Vec<Vec<f64>>>,
}

impl Polarization {
    pub fn new(n: usize, rank: usize) -> Result<Self> {
        let monomials: Vec<Vec<usize>> = MultiIndex::new(n, rank).filter(|ix| ix.windows(2).all(|w| w[0] <= w[1])).collect();
        debug_assert_eq!(monomials.len(), binomial(n + rank - 1, rank));
        let count = 2 * monomials.len() + 4;
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED ^ ((n as u64) << 8) ^ rank as u64);
        let probes: Vec<Vec<f64>> = (0..count).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let design: Vec<Vec<f64>> = probes
            .iter()
            .map(|p| monomials.iter().map(|m| m.iter().map(|&i| p[i]).product()).collect())
            .collect();
        let a = nalgebra::DMatrix::from_fn(count, monomials.len(), |k, a| design[k][a]);
        let pinv = a
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Numerical(format!("polarisation pseudo-inverse failed: {e}")))?;
        let pinv = (0..monomials.len()).map(|a| (0..count).map(|k| pinv[(a, k)]).collect()).collect();
        Ok(Self {
            n,
            rank,
            probes: Arc::new(probes),
            monomials: Arc::new(monomials),
            pinv: Arc::new(pinv),
            design: Arc::new(design),
        })
    }

    pub fn probe_count(&self) -> usize {
        self.probes.len()
    }

    /// Monomial coefficients from the values of `f(q, probe_k)`.
    fn coefficients<T: Scalar>(&self, values: &[T]) -> Vec<T> {
        self.pinv
            .iter()
            .map(|row| {
                let mut s = T::zero();
                for (w, &v) in row.iter().zip(values) {
                    s += v * *w;
                }
                s
            })
            .collect()
    }

    fn values<T: Scalar>(&self, f: &Observable, q: &[T]) -> Vec<T> {
        self.probes
            .iter()
            .map(|p| {
                let pt: Vec<T> = p.iter().map(|&v| T::cst(v)).collect();
                f.eval_qp(q, &pt)
            })
            .collect()
    }

    /// Full symmetric component array at `q`.
    pub fn tensor<T: Scalar>(&self, f: &Observable, q: &[T]) -> Tensor<T> {
        let c = self.coefficients(&self.values(f, q));
        let mut t = Tensor::zeros(self.n, self.rank);
        for (m, &cm) in self.monomials.iter().zip(&c) {
            let mut counts = vec![0usize; self.n];
            for &i in m {
                counts[i] += 1;
            }
            let mult = factorial(self.rank) / counts.iter().map(|&k| factorial(k)).product::<f64>();
            let v = cm / mult;
            for perm in distinct_permutations(m) {
                t.set(&perm, v);
            }
        }
        t
    }

    /// Relative least-squares misfit at `q`; large when `f` is not homogeneous of degree `rank`.
    pub fn misfit(&self, f: &Observable, q: &[f64]) -> f64 {
        let v = self.values(f, q);
        let c = self.coefficients(&v);
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for (row, vk) in self.design.iter().zip(&v) {
            let fit: f64 = row.iter().zip(&c).map(|(a, b)| a * b).sum();
            num = num.max((fit - vk).abs());
            den = den.max(vk.abs());
        }
        num / den.max(f64::MIN_POSITIVE)
    }

    /// The extracted tensor as an upper-index field on configuration space.
    pub fn field(&self, f: &Observable, name: impl Into<String>) -> TensorField {
        TensorField::new(
            name,
            self.n,
            self.rank,
            Symmetry::Symmetric,
            Position::Upper,
            PolarizedField { pol: self.clone(), f: f.clone() },
        )
    }
}

fn distinct_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..sorted.len() {
        let mut next = Vec::new();
        for prefix in &out {
            let mut used = vec![false; sorted.len()];
            // mark the multiset elements already placed
            for &v in prefix {
                let pos = sorted.iter().enumerate().position(|(i, &s)| s == v && !used[i]).expect("element of multiset");
                used[pos] = true;
            }
            let mut last = None;
            for (i, &v) in sorted.iter().enumerate() {
                if !used[i] && last != Some(v) {
                    let mut p = prefix.clone();
                    p.push(v);
                    next.push(p);
                    last = Some(v);
                }
            }
        }
        out = next;
    }
    out
}

struct PolarizedField {
    pol: Polarization,
    f: Observable,
}

impl FieldFn for PolarizedField {
    fn eval<T: Scalar>(&self, q: &[T]) -> Vec<T> {
        self.pol.tensor(&self.f, q).data
    }
}

/// `[K_p, K_q]_SN` at `q`, read off from `{C_{K_p}, C_{K_q}}` by polarisation.
pub fn schouten_nijenhuis(kp: &TensorField, kq: &TensorField, q: &[f64]) -> Result<Tensor<f64>> {
    if kp.symmetry != Symmetry::Symmetric || kq.symmetry != Symmetry::Symmetric {
        return Err(Error::Type("Schouten–Nijenhuis bracket needs totally symmetric tensors".into()));
    }
    if kp.position != Position::Upper || kq.position != Position::Upper {
        return Err(Error::Type("Schouten–Nijenhuis bracket takes upper-index tensors".into()));
    }
    let r = kp.rank + kq.rank - 1;
    let bracket = momentum_polynomial(kp).bracket(&momentum_polynomial(kq));
    let pol = Polarization::new(kp.dim, r)?;
    Ok(pol.tensor(&bracket, q))
}
