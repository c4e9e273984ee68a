//! Small dense linear algebra over generic scalars.
//!
//! Matrices here are tiny (phase spaces and metrics of dimension ≤ 10) and
//! must carry dual numbers, so nalgebra is only used for `f64` work such as
//! eigenvalues and least squares.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};

/// Row-major square or rectangular matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Mat<U> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn values(&self) -> Mat<f64> {
        self.map(|v| v.value())
    }

    pub fn matmul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        Self::from_fn(self.rows, o.cols, |i, j| {
            let mut s = T::zero();
            for k in 0..self.cols {
                s += self[(i, k)] * o[(k, j)];
            }
            s
        })
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                let mut s = T::zero();
                for k in 0..self.cols {
                    s += self[(i, k)] * v[k];
                }
                s
            })
            .collect()
    }

    pub fn trace(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.rows.min(self.cols) {
            s += self[(i, i)];
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.value().abs()))
    }

    /// Gauss–Jordan inverse with partial pivoting on primal values.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.rows;
        assert_eq!(n, self.cols, "inverse of a non-square matrix");
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)].value().abs().total_cmp(&a[(j, col)].value().abs())
                })
                .unwrap_or(col);
            if a[(pivot, col)].value().abs() <= 1e-14 * scale {
                return Err(Error::Geometry(format!(
                    "singular matrix (pivot {:.3e} in column {col})",
                    a[(pivot, col)].value()
                )));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let d = a[(col, col)].recip();
            for j in 0..n {
                a[(col, j)] *= d;
                inv[(col, j)] *= d;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f.value() == 0.0 && f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    let ac = a[(col, j)];
                    let ic = inv[(col, j)];
                    a[(i, j)] -= f * ac;
                    inv[(i, j)] -= f * ic;
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by elimination with partial pivoting.
    pub fn determinant(&self) -> T {
        let n = self.rows;
        let mut a = self.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[(i, col)].value().abs().total_cmp(&a[(j, col)].value().abs())
                })
                .unwrap_or(col);
            if a[(pivot, col)].value() == 0.0 {
                return T::zero();
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for i in col + 1..n {
                let f = a[(i, col)] / p;
                for j in col..n {
                    let v = a[(col, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        det
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].value())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, o: &Mat<T>) -> Mat<T> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + o[(i, j)])
    }
}

impl<T: Scalar> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, o: &Mat<T>) -> Mat<T> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - o[(i, j)])
    }
}

impl<T: Scalar> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, o: &Mat<T>) -> Mat<T> {
        self.matmul(o)
    }
}

/// Complex number over a generic real scalar, enough for Lax matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Self { re, im }
    }
    pub fn real(re: T) -> Self {
        Self { re, im: T::zero() }
    }
    pub fn zero() -> Self {
        Self::real(T::zero())
    }
    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }
    pub fn scale(self, s: T) -> Self {
        Self { re: self.re * s, im: self.im * s }
    }
}

impl<T: Scalar> Add for Cx<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<T: Scalar> Sub for Cx<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<T: Scalar> Mul for Cx<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    pub n: usize,
    pub data: Vec<Cx<T>>,
}

impl<T: Scalar> CMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Cx::zero(); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        self.data[i * self.n + j]
    }

    pub fn matmul(&self, o: &Self) -> Self {
        Self::from_fn(self.n, |i, j| {
            let mut s = Cx::zero();
            for k in 0..self.n {
                s = s + self.get(i, k) * o.get(k, j);
            }
            s
        })
    }

    pub fn trace(&self) -> Cx<T> {
        let mut s = Cx::zero();
        for i in 0..self.n {
            s = s + self.get(i, i);
        }
        s
    }

    /// Flatten as all real parts followed by all imaginary parts.
    pub fn to_flat(&self) -> Vec<T> {
        self.data.iter().map(|c| c.re).chain(self.data.iter().map(|c| c.im)).collect()
    }

    pub fn from_flat(n: usize, flat: &[T]) -> Self {
        let k = n * n;
        Self { n, data: (0..k).map(|i| Cx::new(flat[i], flat[k + i])).collect() }
    }
}

/// Dense tensor with `rank` indices each running over `dim` values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor<T> {
    pub dim: usize,
    pub rank: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Self { dim, rank, data: vec![T::zero(); dim.pow(rank as u32)] }
    }

    pub fn from_vec(dim: usize, rank: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), dim.pow(rank as u32), "tensor data length");
        Self { dim, rank, data }
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.value().abs()))
    }

    pub fn values(&self) -> Tensor<f64> {
        Tensor { dim: self.dim, rank: self.rank, data: self.data.iter().map(|v| v.value()).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { dim: self.dim, rank: self.rank, data: self.data.iter().map(|&a| a * s).collect() }
    }

    /// Contract index `slot` with the matrix `m`: `t'_{..a..} = m_{a b} t_{..b..}`.
    pub fn transform_slot(&self, slot: usize, m: &Mat<T>) -> Self {
        let mut out = Self::zeros(self.dim, self.rank);
        let stride = self.dim.pow((self.rank - slot - 1) as u32);
        for (o, v) in out.data.iter_mut().enumerate() {
            let a = (o / stride) % self.dim;
            let base = o - a * stride;
            let mut s = T::zero();
            for b in 0..self.dim {
                s += m[(a, b)] * self.data[base + b * stride];
            }
            *v = s;
        }
        out
    }

    /// Apply the same matrix to every index (lowering or raising all slots).
    pub fn transform_all(&self, m: &Mat<T>) -> Self {
        (0..self.rank).fold(self.clone(), |t, s| t.transform_slot(s, m))
    }

    /// Average over all permutations of the slots in `slots`.
    pub fn symmetrize(&self, slots: &[usize]) -> Self {
        self.project(slots, false)
    }

    /// Signed average over all permutations of `slots`.
    pub fn antisymmetrize(&self, slots: &[usize]) -> Self {
        self.project(slots, true)
    }

    fn project(&self, slots: &[usize], signed: bool) -> Self {
        let perms = permutations(slots.len());
        let norm = 1.0 / perms.len() as f64;
        let mut out = Self::zeros(self.dim, self.rank);
        let mut src = vec![0; self.rank];
        for idx in MultiIndex::new(self.dim, self.rank) {
            let mut s = T::zero();
            for (perm, sign) in &perms {
                src.copy_from_slice(&idx);
                for (k, &p) in perm.iter().enumerate() {
                    src[slots[k]] = idx[slots[p]];
                }
                let v = self.get(&src);
                s += if signed && *sign < 0 { -v } else { v };
            }
            out.set(&idx, s * norm);
        }
        out
    }
}

/// Iterator over all multi-indices of a given rank, last index fastest.
pub struct MultiIndex {
    dim: usize,
    cur: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub fn new(dim: usize, rank: usize) -> Self {
        Self { dim, cur: vec![0; rank], done: dim == 0 && rank > 0 }
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut k = self.cur.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.cur[k] += 1;
            if self.cur[k] < self.dim {
                break;
            }
            self.cur[k] = 0;
        }
        Some(out)
    }
}

/// All permutations of `0..k` with their signs.
pub fn permutations(k: usize) -> Vec<(Vec<usize>, i32)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<(Vec<usize>, i32)>) {
        let k = used.len();
        if prefix.len() == k {
            out.push((prefix.clone(), permutation_sign(prefix)));
            return;
        }
        for i in 0..k {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Sign of a permutation given as images of `0..k`; zero on repeats.
pub fn permutation_sign(p: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0;
            }
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Dual, D1};

    #[test]
    fn inverse_of_dual_matrix_differentiates_correctly() {
        // d(A⁻¹) = −A⁻¹ dA A⁻¹
        let a = Mat::from_vec(
            2,
            2,
            vec![Dual::new(2.0, 1.0), Dual::new(1.0, 0.0), Dual::new(0.5, 0.0), Dual::new(3.0, 2.0)],
        );
        let inv = a.inverse().unwrap();
        let a0 = a.values();
        let da = a.map(|d: D1| d.eps);
        let i0 = a0.inverse().unwrap();
        let expect = &(&i0 * &da) * &i0;
        for k in 0..4 {
            assert!((inv.data[k].re - i0.data[k]).abs() < 1e-14);
            assert!((inv.data[k].eps + expect.data[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn determinant_of_permutation_matrix() {
        let p = Mat::from_vec(3, 3, vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.determinant(), 1.0);
        let s = Mat::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(s.determinant(), -1.0);
    }

    #[test]
    fn symmetrize_and_antisymmetrize_rank2() {
        let t = Tensor::from_vec(2, 2, vec![1.0, 2.0, 4.0, 3.0]);
        let s = t.symmetrize(&[0, 1]);
        assert_eq!(s.data, vec![1.0, 3.0, 3.0, 3.0]);
        let a = t.antisymmetrize(&[0, 1]);
        assert_eq!(a.data, vec![0.0, -1.0, 1.0, 0.0]);
    }

    #[test]
    fn transform_slot_matches_matrix_product() {
        let t = Tensor::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let m = Mat::from_vec(2, 2, vec![0.0, 1.0, 2.0, 0.0]);
        // slot 0: (M T)_{ab}; slot 1: (T Mᵀ)_{ab}
        assert_eq!(t.transform_slot(0, &m).data, vec![3.0, 4.0, 2.0, 4.0]);
        assert_eq!(t.transform_slot(1, &m).data, vec![2.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn combinatorics() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1);
        assert_eq!(binomial(7, 3), 35);
        assert_eq!(factorial(4), 24.0);
        assert_eq!(MultiIndex::new(3, 2).count(), 9);
        assert_eq!(MultiIndex::new(3, 0).count(), 1);
    }
}
