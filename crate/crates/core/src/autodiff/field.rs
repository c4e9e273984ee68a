use std::fmt;
use std::sync::Arc;

use super::dual::{Scalar, D1, D2, D3};

/// A vector-valued map `ℝᵐ → ℝᵏ` written once, generically over the scalar.
///
/// Every metric, tensor field and phase-space function in the crate is
/// ultimately one of these, which is what lets a single definition be
/// evaluated plainly, differentiated once for brackets and twice for
/// Hessians or curvature.
pub trait FieldFn: Send + Sync + 'static {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T>;
}

/// Object-safe face of [`FieldFn`], monomorphised at a fixed set of depths.
pub trait ErasedField: Send + Sync {
    fn eval_f64(&self, x: &[f64]) -> Vec<f64>;
    fn eval_d1(&self, x: &[D1]) -> Vec<D1>;
    fn eval_d2(&self, x: &[D2]) -> Vec<D2>;
    fn eval_d3(&self, x: &[D3]) -> Vec<D3>;
}

impl<F: FieldFn> ErasedField for F {
    fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
    fn eval_d1(&self, x: &[D1]) -> Vec<D1> {
        self.eval(x)
    }
    fn eval_d2(&self, x: &[D2]) -> Vec<D2> {
        self.eval(x)
    }
    fn eval_d3(&self, x: &[D3]) -> Vec<D3> {
        self.eval(x)
    }
}

/// Shared, type-erased field. Cheap to clone.
#[derive(Clone)]
pub struct DynField(Arc<dyn ErasedField>);

impl DynField {
    pub fn new(f: impl FieldFn) -> Self {
        Self(Arc::new(f))
    }

    pub fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        T::dispatch0(&*self.0, x)
    }
}

impl FieldFn for DynField {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        DynField::eval(self, x)
    }
}

impl fmt::Debug for DynField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DynField")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::seed;

    struct Square;

    impl FieldFn for Square {
        fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
            vec![x[0] * x[0] * x[1]]
        }
    }

    #[test]
    fn erased_field_evaluates_at_every_depth() {
        let f = DynField::new(Square);
        assert_eq!(f.eval(&[2.0, 3.0]), vec![12.0]);
        let d = f.eval(&seed(&[2.0, 3.0], 0));
        assert_eq!(d[0].eps, 12.0);
        let x: Vec<D2> = seed(&seed(&[2.0, 3.0], 0), 0);
        assert_eq!(f.eval(&x)[0].eps.eps, 6.0);
        let x3: Vec<D3> = seed(&x, 1);
        let y = f.eval(&x3)[0];
        assert_eq!(y.eps.eps.eps, 2.0);
    }
}
