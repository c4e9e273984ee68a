use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{seed, DynField, FieldFn, Scalar};
use crate::error::{Error, Result};

/// Canonical state `(q, p)` of a system with `n` degrees of freedom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::Config(format!(
                "phase point needs q and p of equal nonzero length, got {} and {}",
                q.len(),
                p.len()
            )));
        }
        if let Some(i) = q.iter().chain(&p).position(|v| !v.is_finite()) {
            return Err(Error::Evaluation { index: i });
        }
        Ok(Self { q, p })
    }

    /// Split a flat `(q, p)` state vector.
    pub fn from_flat(y: &[f64]) -> Self {
        let n = y.len() / 2;
        Self { q: y[..n].to_vec(), p: y[n..].to_vec() }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }
}

/// A phase-space function written over a generic scalar.
pub trait PhaseFn: Send + Sync + 'static {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T;
}

struct PhaseAdapter<F> {
    n: usize,
    f: F,
}

impl<F: PhaseFn> FieldFn for PhaseAdapter<F> {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        vec![self.f.eval(&y[..self.n], &y[self.n..])]
    }
}

/// Declared degree in the momenta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degree {
    Poly(u32),
    NonPolynomial,
}

/// Named phase-space function with autodiff access.
///
/// `graded` optionally lists the parts of fixed momentum degree, which is
/// what the null Eisenhart lift needs to homogenise the function.
#[derive(Clone)]
pub struct Observable {
    pub name: String,
    pub degree: Degree,
    n: usize,
    field: DynField,
    graded: Option<Arc<Vec<(u32, Observable)>>>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("n", &self.n)
            .finish()
    }
}

impl Observable {
    pub fn new(name: impl Into<String>, degree: Degree, n: usize, f: impl PhaseFn) -> Self {
        Self::from_field(name, degree, n, DynField::new(PhaseAdapter { n, f }))
    }

    /// Wrap a field on the flat `2n` state returning one value.
    pub fn from_field(name: impl Into<String>, degree: Degree, n: usize, field: DynField) -> Self {
        Self { name: name.into(), degree, n, field, graded: None }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_grading(mut self, parts: Vec<(u32, Observable)>) -> Self {
        self.graded = Some(Arc::new(parts));
        self
    }

    pub fn grading(&self) -> Option<&[(u32, Observable)]> {
        self.graded.as_deref().map(|v| v.as_slice())
    }

    pub fn field(&self) -> &DynField {
        &self.field
    }

    /// Evaluate on a flat state `(q, p)`.
    pub fn eval_flat<T: Scalar>(&self, y: &[T]) -> T {
        self.field.eval(y)[0]
    }

    pub fn eval_qp<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        let y: Vec<T> = q.iter().chain(p).copied().collect();
        self.eval_flat(&y)
    }

    pub fn value(&self, x: &PhasePoint) -> f64 {
        self.eval_flat(&x.to_flat())
    }

    /// Gradient `(∂/∂q, ∂/∂p)` on a flat state; rejects non-finite entries.
    pub fn gradient_flat<T: Scalar>(&self, y: &[T]) -> Result<Vec<T>> {
        let g = flat_gradient(&self.field, y);
        match g.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::Evaluation { index: i }),
            None => Ok(g),
        }
    }

    pub fn gradient(&self, x: &PhasePoint) -> Result<Vec<f64>> {
        self.gradient_flat(&x.to_flat())
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(format!("{c}"), Degree::Poly(0), n, Constant(c))
    }

    /// Coordinate function `q^i` (or `p_i` when `momentum`).
    pub fn coordinate(n: usize, i: usize, momentum: bool) -> Self {
        let name = if momentum { format!("p{}", i + 1) } else { format!("q{}", i + 1) };
        let degree = Degree::Poly(momentum as u32);
        Self::new(name, degree, n, Coordinate { i, momentum })
    }

    /// `{self, other}` as a composite observable.
    pub fn bracket(&self, other: &Observable) -> Observable {
        let degree = match (self.degree, other.degree) {
            (Degree::Poly(a), Degree::Poly(b)) => Degree::Poly((a + b).saturating_sub(1)),
            _ => Degree::NonPolynomial,
        };
        Observable::from_field(
            format!("{{{},{}}}", self.name, other.name),
            degree,
            self.n,
            DynField::new(BracketField { f: self.clone(), g: other.clone() }),
        )
    }

    pub fn scaled(&self, c: f64) -> Observable {
        Combination::new(self.n).term(c, vec![self.clone()]).build(format!("{c}*{}", self.name))
    }

    pub fn plus(&self, other: &Observable) -> Observable {
        Combination::new(self.n)
            .term(1.0, vec![self.clone()])
            .term(1.0, vec![other.clone()])
            .build(format!("{}+{}", self.name, other.name))
    }

    pub fn minus(&self, other: &Observable) -> Observable {
        Combination::new(self.n)
            .term(1.0, vec![self.clone()])
            .term(-1.0, vec![other.clone()])
            .build(format!("{}-{}", self.name, other.name))
    }

    pub fn times(&self, other: &Observable) -> Observable {
        Combination::new(self.n)
            .term(1.0, vec![self.clone(), other.clone()])
            .build(format!("{}*{}", self.name, other.name))
    }
}

/// Gradient of the first output of `f` by one dual sweep per coordinate.
pub(crate) fn flat_gradient<T: Scalar>(f: &DynField, y: &[T]) -> Vec<T> {
    (0..y.len()).map(|i| f.eval(&seed(y, i))[0].eps).collect()
}

struct Constant(f64);

impl PhaseFn for Constant {
    fn eval<T: Scalar>(&self, _q: &[T], _p: &[T]) -> T {
        T::cst(self.0)
    }
}

struct Coordinate {
    i: usize,
    momentum: bool,
}

impl PhaseFn for Coordinate {
    fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
        if self.momentum {
            p[self.i]
        } else {
            q[self.i]
        }
    }
}

struct BracketField {
    f: Observable,
    g: Observable,
}

impl FieldFn for BracketField {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let df = flat_gradient(&self.f.field, y);
        let dg = flat_gradient(&self.g.field, y);
        vec![symplectic_pairing(&df, &dg)]
    }
}

/// `Σ_μ (∂_q f ∂_p g − ∂_p f ∂_q g)` from flat gradients.
pub(crate) fn symplectic_pairing<T: Scalar>(df: &[T], dg: &[T]) -> T {
    let n = df.len() / 2;
    let mut s = T::zero();
    for mu in 0..n {
        s += df[mu] * dg[n + mu] - df[n + mu] * dg[mu];
    }
    s
}

/// Sum of coefficient-weighted products of observables.
pub struct Combination {
    n: usize,
    terms: Vec<(f64, Vec<Observable>)>,
}

impl Combination {
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn term(mut self, c: f64, factors: Vec<Observable>) -> Self {
        self.terms.push((c, factors));
        self
    }

    pub fn build(self, name: impl Into<String>) -> Observable {
        let degree = self
            .terms
            .iter()
            .map(|(_, fs)| {
                fs.iter().try_fold(0u32, |acc, f| match f.degree {
                    Degree::Poly(d) => Some(acc + d),
                    Degree::NonPolynomial => None,
                })
            })
            .try_fold(0u32, |acc, d| d.map(|d| acc.max(d)))
            .map_or(Degree::NonPolynomial, Degree::Poly);
        let n = self.n;
        Observable::from_field(name, degree, n, DynField::new(CombinationField { terms: self.terms }))
    }
}

struct CombinationField {
    terms: Vec<(f64, Vec<Observable>)>,
}

impl FieldFn for CombinationField {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let mut s = T::zero();
        for (c, factors) in &self.terms {
            let mut t = T::cst(*c);
            for f in factors {
                t *= f.eval_flat(y);
            }
            s += t;
        }
        vec![s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Cubic;
    impl PhaseFn for Cubic {
        fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
            q[0] * q[0] * p[0] + p[0].sin()
        }
    }

    #[test]
    fn phase_point_rejects_bad_input() {
        assert!(PhasePoint::new(vec![1.0], vec![]).is_err());
        assert!(PhasePoint::new(vec![], vec![]).is_err());
        assert!(matches!(
            PhasePoint::new(vec![1.0, f64::NAN], vec![0.0, 0.0]),
            Err(Error::Evaluation { index: 1 })
        ));
    }

    #[test]
    fn observable_gradient_and_combinators() {
        let f = Observable::new("c", Degree::NonPolynomial, 1, Cubic);
        let x = PhasePoint::new(vec![2.0], vec![0.5]).unwrap();
        let g = f.gradient(&x).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-15);
        assert!((g[1] - (4.0 + 0.5f64.cos())).abs() < 1e-15);
        let q = Observable::coordinate(1, 0, false);
        let two_f = f.plus(&f).minus(&q.times(&q).scaled(0.0));
        assert!((two_f.value(&x) - 2.0 * f.value(&x)).abs() < 1e-15);
        // {q, f} = ∂f/∂p
        assert!((q.bracket(&f).value(&x) - g[1]).abs() < 1e-14);
    }

    #[test]
    fn combination_degree_is_max_of_products() {
        let p = Observable::coordinate(2, 1, true);
        let q = Observable::coordinate(2, 0, false);
        let c = Combination::new(2).term(1.0, vec![p.clone(), p.clone(), q]).term(1.0, vec![p]).build("x");
        assert_eq!(c.degree, Degree::Poly(2));
    }
}
