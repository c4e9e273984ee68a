use super::dual::{seed, Dual, Scalar, D2};

/// Value and gradient of a scalar function by one forward sweep per input.
pub fn gradient<T, F>(f: F, x: &[T]) -> (T, Vec<T>)
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Dual<T>,
{
    let mut value = T::zero();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let y = f(&seed(x, i));
        value = y.re;
        grad.push(y.eps);
    }
    if x.is_empty() {
        value = f(&[]).re;
    }
    (value, grad)
}

/// Values and Jacobian `jac[i][k] = ∂f_k/∂x_i` (direction-major).
pub fn jacobian<T, F>(f: F, x: &[T]) -> (Vec<T>, Vec<Vec<T>>)
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Vec<Dual<T>>,
{
    let mut values = Vec::new();
    let mut jac = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let y = f(&seed(x, i));
        values = y.iter().map(|d| d.re).collect();
        jac.push(y.iter().map(|d| d.eps).collect());
    }
    (values, jac)
}

/// Directional derivative of a vector map along `v`.
pub fn directional<T, F>(f: F, x: &[T], v: &[T]) -> (Vec<T>, Vec<T>)
where
    T: Scalar,
    F: Fn(&[Dual<T>]) -> Vec<Dual<T>>,
{
    let y = f(&super::dual::seed_along(x, v));
    (y.iter().map(|d| d.re).collect(), y.iter().map(|d| d.eps).collect())
}

/// Value, gradient and Hessian through nested duals.
pub fn hessian<F>(f: F, x: &[f64]) -> (f64, Vec<f64>, Vec<Vec<f64>>)
where
    F: Fn(&[D2]) -> D2,
{
    let n = x.len();
    let mut value = 0.0;
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        let inner = seed(x, i);
        for j in i..n {
            let y = f(&seed(&inner, j));
            value = y.re.re;
            if j == i {
                grad[i] = y.re.eps;
            }
            hess[i][j] = y.eps.eps;
            hess[j][i] = y.eps.eps;
        }
    }
    (value, grad, hess)
}

/// Central-difference step `cbrt(eps)·max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient, the fallback for functions that cannot be
/// evaluated on dual numbers.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i]);
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Hessian from four-point stencils.
pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let hi = f64::EPSILON.powf(0.25) * x[i].abs().max(1.0);
            let hj = f64::EPSILON.powf(0.25) * x[j].abs().max(1.0);
            let mut eval = |si: f64, sj: f64| {
                xp[i] += si * hi;
                xp[j] += sj * hj;
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * hi * hj);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    hess
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosen<T: Scalar>(x: &[T]) -> T {
        let a = T::one() - x[0];
        let b = x[1] - x[0] * x[0];
        a * a + b * b * 100.0
    }

    #[test]
    fn gradient_matches_closed_form() {
        let x = [0.3, -0.8];
        let (v, g) = gradient(|y| rosen(y), &x);
        assert!((v - rosen(&x)).abs() < 1e-15);
        let b: f64 = x[1] - x[0] * x[0];
        assert!((g[0] - (-2.0 * (1.0 - x[0]) - 400.0 * x[0] * b)).abs() < 1e-12);
        assert!((g[1] - 200.0 * b).abs() < 1e-12);
    }

    #[test]
    fn hessian_agrees_with_finite_differences() {
        let x = [0.3, -0.8];
        let (_, _, h) = hessian(|y| rosen(y), &x);
        let fd = fd_hessian(|y| rosen(y), &x);
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[i][j] - fd[i][j]).abs() < 1e-4 * h[i][j].abs().max(1.0));
            }
        }
        assert!((h[0][1] + 400.0 * x[0]).abs() < 1e-12);
    }

    #[test]
    fn fd_gradient_relative_accuracy() {
        let x = [1.7, 2.1];
        let (_, g) = gradient(|y| rosen(y), &x);
        let fd = fd_gradient(|y| rosen(y), &x);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0));
        }
    }
}
