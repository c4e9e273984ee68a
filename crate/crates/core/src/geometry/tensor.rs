use std::fmt;

use serde::{Deserialize, Serialize};

use crate::autodiff::{DynField, FieldFn, Scalar};
use crate::linalg::{permutation_sign, MultiIndex, Tensor};

use super::metric::MetricField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    Lower,
    Upper,
}

/// Tensor field whose indices all sit in the same position.
#[derive(Clone)]
pub struct TensorField {
    pub name: String,
    pub dim: usize,
    pub rank: usize,
    pub symmetry: Symmetry,
    pub position: Position,
    field: DynField,
}

impl fmt::Debug for TensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("rank", &self.rank)
            .field("symmetry", &self.symmetry)
            .field("position", &self.position)
            .finish()
    }
}

impl TensorField {
    /// `f` returns the `dim^rank` components row-major.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        rank: usize,
        symmetry: Symmetry,
        position: Position,
        f: impl FieldFn,
    ) -> Self {
        Self::from_field(name, dim, rank, symmetry, position, DynField::new(f))
    }

    pub fn from_field(
        name: impl Into<String>,
        dim: usize,
        rank: usize,
        symmetry: Symmetry,
        position: Position,
        field: DynField,
    ) -> Self {
        Self { name: name.into(), dim, rank, symmetry, position, field }
    }

    pub fn zero(dim: usize, rank: usize, position: Position) -> Self {
        Self::new("0", dim, rank, Symmetry::Symmetric, position, Zero(dim.pow(rank as u32)))
    }

    pub fn field(&self) -> &DynField {
        &self.field
    }

    pub fn components<T: Scalar>(&self, x: &[T]) -> Tensor<T> {
        Tensor::from_vec(self.dim, self.rank, self.field.eval(x))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Largest violation of the declared symmetry at `x`.
    pub fn symmetry_defect(&self, x: &[f64]) -> f64 {
        let t = self.components(x);
        let all: Vec<usize> = (0..self.rank).collect();
        match self.symmetry {
            Symmetry::None => 0.0,
            Symmetry::Symmetric => t.sub(&t.symmetrize(&all)).max_abs(),
            Symmetry::Antisymmetric => t.sub(&t.antisymmetrize(&all)).max_abs(),
        }
    }

    /// Same tensor with every index moved to `to` using `metric`.
    pub fn in_position(&self, metric: &MetricField, to: Position) -> TensorField {
        if to == self.position {
            return self.clone();
        }
        let name = format!("{}{}", self.name, if to == Position::Lower { "_" } else { "^" });
        TensorField::new(
            name,
            self.dim,
            self.rank,
            self.symmetry,
            to,
            Repositioned { t: self.clone(), metric: metric.clone(), to },
        )
    }

    /// Value of a rank-0 field.
    pub fn scalar_value<T: Scalar>(&self, x: &[T]) -> T {
        self.field.eval(x)[0]
    }
}

struct Zero(usize);

impl FieldFn for Zero {
    fn eval<T: Scalar>(&self, _x: &[T]) -> Vec<T> {
        vec![T::zero(); self.0]
    }
}

struct Repositioned {
    t: TensorField,
    metric: MetricField,
    to: Position,
}

impl FieldFn for Repositioned {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let m = match self.to {
            Position::Lower => self.metric.g(x),
            Position::Upper => match self.metric.inverse(x) {
                Ok(m) => m,
                Err(_) => return vec![T::cst(f64::NAN); self.t.dim.pow(self.t.rank as u32)],
            },
        };
        self.t.components(x).transform_all(&m).data
    }
}

/// Hodge dual `(*h)_{ν…} = (√|g|/p!) ε_{μ…ν…} h^{μ…}` of a lower-index form.
pub struct HodgeDual {
    pub h: TensorField,
    pub metric: MetricField,
}

impl HodgeDual {
    pub fn field(h: &TensorField, metric: &MetricField) -> TensorField {
        let h = h.in_position(metric, Position::Lower);
        TensorField::new(
            format!("*{}", h.name),
            h.dim,
            h.dim - h.rank,
            Symmetry::Antisymmetric,
            Position::Lower,
            HodgeDual { h, metric: metric.clone() },
        )
    }
}

impl FieldFn for HodgeDual {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = self.h.dim;
        let p = self.h.rank;
        let g = self.metric.g(x);
        let Ok(ginv) = g.inverse() else {
            return vec![T::cst(f64::NAN); n.pow((n - p) as u32)];
        };
        let vol = g.determinant().abs().sqrt();
        let hup = self.h.components(x).transform_all(&ginv);
        let mut out = Tensor::zeros(n, n - p);
        let inv_fact = 1.0 / crate::linalg::factorial(p);
        let mut idx = vec![0; n];
        for nu in MultiIndex::new(n, n - p) {
            if permutation_sign(&nu) == 0 {
                continue;
            }
            let mut s = T::zero();
            for mu in MultiIndex::new(n, p) {
                idx[..p].copy_from_slice(&mu);
                idx[p..].copy_from_slice(&nu);
                let sign = permutation_sign(&idx);
                if sign != 0 {
                    let v = hup.get(&mu);
                    s += if sign > 0 { v } else { -v };
                }
            }
            out.set(&nu, s * vol * inv_fact);
        }
        out.data
    }
}

/// `(a∧b) = ((p+q)!/(p!q!)) a_{[…}b_{…]}` for lower-index forms.
pub struct Wedge {
    pub a: TensorField,
    pub b: TensorField,
}

impl Wedge {
    pub fn field(a: &TensorField, b: &TensorField) -> TensorField {
        TensorField::new(
            format!("{}∧{}", a.name, b.name),
            a.dim,
            a.rank + b.rank,
            Symmetry::Antisymmetric,
            Position::Lower,
            Wedge { a: a.clone(), b: b.clone() },
        )
    }
}

impl FieldFn for Wedge {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let (p, q) = (self.a.rank, self.b.rank);
        let n = self.a.dim;
        let ta = self.a.components(x);
        let tb = self.b.components(x);
        let mut prod = Tensor::zeros(n, p + q);
        for idx in MultiIndex::new(n, p + q) {
            prod.set(&idx, ta.get(&idx[..p]) * tb.get(&idx[p..]));
        }
        let all: Vec<usize> = (0..p + q).collect();
        let c = crate::linalg::factorial(p + q) / (crate::linalg::factorial(p) * crate::linalg::factorial(q));
        prod.antisymmetrize(&all).scaled(T::cst(c)).data
    }
}

/// Exterior derivative `(dh)_{λμ…} = (p+1) ∂_{[λ}h_{μ…]}` of a lower-index form.
pub struct ExteriorDerivative {
    pub h: TensorField,
}

impl ExteriorDerivative {
    pub fn field(h: &TensorField) -> TensorField {
        TensorField::new(
            format!("d{}", h.name),
            h.dim,
            h.rank + 1,
            Symmetry::Antisymmetric,
            Position::Lower,
            ExteriorDerivative { h: h.clone() },
        )
    }
}

impl FieldFn for ExteriorDerivative {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = self.h.dim;
        let p = self.h.rank;
        let partials: Vec<Tensor<T>> = (0..n)
            .map(|l| {
                let d = self.h.components(&crate::autodiff::seed(x, l));
                Tensor::from_vec(n, p, d.data.iter().map(|v| v.eps).collect())
            })
            .collect();
        let mut dt = Tensor::zeros(n, p + 1);
        for idx in MultiIndex::new(n, p + 1) {
            dt.set(&idx, partials[idx[0]].get(&idx[1..]));
        }
        let all: Vec<usize> = (0..=p).collect();
        dt.antisymmetrize(&all).scaled(T::cst((p + 1) as f64)).data
    }
}

/// `K^{μν} = h^μ{}_{λ…} h^{νλ…}` from a form `h`.
pub struct KySquare {
    pub h: TensorField,
    pub metric: MetricField,
}

impl KySquare {
    pub fn field(h: &TensorField, metric: &MetricField) -> TensorField {
        let h = h.in_position(metric, Position::Lower);
        TensorField::new(
            format!("{}²", h.name),
            h.dim,
            2,
            Symmetry::Symmetric,
            Position::Upper,
            KySquare { h, metric: metric.clone() },
        )
    }
}

impl FieldFn for KySquare {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let n = self.h.dim;
        let p = self.h.rank;
        let Ok(ginv) = self.metric.inverse(x) else {
            return vec![T::cst(f64::NAN); n * n];
        };
        let low = self.h.components(x);
        let up = low.transform_all(&ginv);
        let first_up = low.transform_slot(0, &ginv);
        let mut k = vec![T::zero(); n * n];
        let stride = n.pow((p - 1) as u32);
        for mu in 0..n {
            for nu in 0..n {
                let mut s = T::zero();
                for l in 0..stride {
                    s += up.data[mu * stride + l] * first_up.data[nu * stride + l];
                }
                k[mu * n + nu] = s;
            }
        }
        k
    }
}
