use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use super::field::ErasedField;

/// Real scalar that every evaluator in the crate is generic over.
///
/// `f64` is the plain case; [`Dual`] adds one forward-mode tangent and nests,
/// so `Dual<Dual<f64>>` carries mixed second derivatives.
///
/// Constants have to sit on the right of an operator (`x * 2.0`, not
/// `2.0 * x`) because bounds on `f64` cannot be implied by this trait.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
{
    fn cst(v: f64) -> Self;
    /// Primal value with every tangent dropped.
    fn value(self) -> f64;
    fn is_finite(self) -> bool;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, a: f64) -> Self;
    fn atan2(self, x: Self) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }

    // Routing of type-erased fields to the monomorphised evaluator of the
    // right depth. `dispatch_k` evaluates at `Self` wrapped in k more duals.
    #[doc(hidden)]
    fn dispatch0(f: &dyn ErasedField, x: &[Self]) -> Vec<Self>;
    #[doc(hidden)]
    fn dispatch1(f: &dyn ErasedField, x: &[Dual<Self>]) -> Vec<Dual<Self>>;
    #[doc(hidden)]
    fn dispatch2(f: &dyn ErasedField, x: &[Dual<Dual<Self>>]) -> Vec<Dual<Dual<Self>>>;
    #[doc(hidden)]
    fn dispatch3(
        f: &dyn ErasedField,
        x: &[Dual<Dual<Dual<Self>>>],
    ) -> Vec<Dual<Dual<Dual<Self>>>>;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn powf(self, a: f64) -> Self {
        f64::powf(self, a)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }

    fn dispatch0(f: &dyn ErasedField, x: &[f64]) -> Vec<f64> {
        f.eval_f64(x)
    }
    fn dispatch1(f: &dyn ErasedField, x: &[D1]) -> Vec<D1> {
        f.eval_d1(x)
    }
    fn dispatch2(f: &dyn ErasedField, x: &[D2]) -> Vec<D2> {
        f.eval_d2(x)
    }
    fn dispatch3(f: &dyn ErasedField, x: &[D3]) -> Vec<D3> {
        f.eval_d3(x)
    }
}

/// Forward-mode dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

pub type D1 = Dual<f64>;
pub type D2 = Dual<D1>;
pub type D3 = Dual<D2>;

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    pub fn constant(re: T) -> Self {
        Self { re, eps: T::zero() }
    }

    pub fn variable(re: T) -> Self {
        Self { re, eps: T::one() }
    }

    fn chain(self, f: T, df: T) -> Self {
        Self { re: f, eps: self.eps * df }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, eps: self.eps + o.eps }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, eps: self.eps - o.eps }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re, eps: self.eps * o.re + self.re * o.eps }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let re = self.re * inv;
        Self { re, eps: (self.eps - re * o.eps) * inv }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, eps: -self.eps }
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Self { re: self.re + o, eps: self.eps }
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Self { re: self.re - o, eps: self.eps }
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self { re: self.re * o, eps: self.eps * o }
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    fn div(self, o: f64) -> Self {
        Self { re: self.re / o, eps: self.eps / o }
    }
}

impl<T: Scalar> AddAssign for Dual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Scalar> SubAssign for Dual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Scalar> MulAssign for Dual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Scalar> DivAssign for Dual<T> {
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(v: f64) -> Self {
        Self::constant(T::cst(v))
    }
    fn value(self) -> f64 {
        self.re.value()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, t * t + 1.0)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
    fn abs(self) -> Self {
        if self.re.value() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ => self.chain(self.re.powi(n), self.re.powi(n - 1) * n as f64),
        }
    }
    fn powf(self, a: f64) -> Self {
        self.chain(self.re.powf(a), self.re.powf(a - 1.0) * a)
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = x.re * x.re + self.re * self.re;
        Self {
            re: self.re.atan2(x.re),
            eps: (x.re * self.eps - self.re * x.eps) / r2,
        }
    }

    fn dispatch0(f: &dyn ErasedField, x: &[Self]) -> Vec<Self> {
        T::dispatch1(f, x)
    }
    fn dispatch1(f: &dyn ErasedField, x: &[Dual<Self>]) -> Vec<Dual<Self>> {
        T::dispatch2(f, x)
    }
    fn dispatch2(f: &dyn ErasedField, x: &[Dual<Dual<Self>>]) -> Vec<Dual<Dual<Self>>> {
        T::dispatch3(f, x)
    }
    fn dispatch3(
        _f: &dyn ErasedField,
        _x: &[Dual<Dual<Dual<Self>>>],
    ) -> Vec<Dual<Dual<Dual<Self>>>> {
        panic!(
            "type-erased fields support derivatives up to order {}; composite fields nested deeper must hold concrete types",
            super::MAX_ERASED_ORDER
        )
    }
}

/// Lift a slice of scalars into constants one dual level up.
pub fn constants<T: Scalar>(x: &[T]) -> Vec<Dual<T>> {
    x.iter().map(|&v| Dual::constant(v)).collect()
}

/// Seed coordinate `dir` with unit tangent.
pub fn seed<T: Scalar>(x: &[T], dir: usize) -> Vec<Dual<T>> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| if i == dir { Dual::variable(v) } else { Dual::constant(v) })
        .collect()
}

/// Seed along an arbitrary tangent vector.
pub fn seed_along<T: Scalar>(x: &[T], v: &[T]) -> Vec<Dual<T>> {
    x.iter().zip(v).map(|(&a, &b)| Dual::new(a, b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_quotient_rules() {
        let x = Dual::variable(3.0);
        let y = x * x / (x + 1.0);
        assert!((y.re - 9.0 / 4.0).abs() < 1e-15);
        // d/dx x²/(x+1) = (x² + 2x)/(x+1)²
        assert!((y.eps - 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn nested_dual_gives_second_derivative() {
        let x: D2 = Dual::new(Dual::new(0.7, 1.0), Dual::new(1.0, 0.0));
        let y = x.sin() * x.exp();
        let x0: f64 = 0.7;
        let d2 = 2.0 * x0.cos() * x0.exp();
        assert!((y.eps.eps - d2).abs() < 1e-14);
        assert!((y.re.eps - y.eps.re).abs() < 1e-15);
    }

    #[test]
    fn atan2_tangent() {
        let y = Dual::variable(0.4);
        let x = Dual::constant(1.3);
        let a = y.atan2(x);
        assert!((a.eps - 1.3 / (1.3f64 * 1.3 + 0.16)).abs() < 1e-15);
    }
}
