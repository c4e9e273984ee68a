use crate::autodiff::{DynField, FieldFn, Scalar};
use crate::error::{Error, Result};
use crate::geometry::christoffel_generic;
use crate::linalg::Mat;

use super::phase::{symplectic_pairing, Observable, PhasePoint};
use super::system::{HamiltonianSystem, NaturalDecomposition};

/// `{f, g} = Σ_μ (∂f/∂q^μ ∂g/∂p_μ − ∂f/∂p_μ ∂g/∂q^μ)` at `x`.
pub fn poisson_bracket(f: &Observable, g: &Observable, x: &PhasePoint) -> Result<f64> {
    let y = x.to_flat();
    let df = f.gradient_flat(&y)?;
    let dg = g.gradient_flat(&y)?;
    Ok(symplectic_pairing(&df, &dg))
}

/// `X_f = (∂f/∂p, −∂f/∂q)`, so that `{f, g} = −X_f(g)`.
pub fn symplectic_gradient(f: &Observable, x: &PhasePoint) -> Result<Vec<f64>> {
    let df = f.gradient(x)?;
    let n = x.n();
    let mut out = vec![0.0; 2 * n];
    for mu in 0..n {
        out[mu] = df[n + mu];
        out[n + mu] = -df[mu];
    }
    Ok(out)
}

/// Bracket of functions of `(q, Π)` in the gauge-covariant form
/// `D_μf ∂g/∂Π_μ − ∂f/∂Π_μ D_μg + eF_{μν} ∂f/∂Π_μ ∂g/∂Π_ν`.
///
/// `f` and `g` read their momentum slots as `Π`; `x` is a canonical point.
pub fn covariant_poisson_bracket(
    f: &Observable,
    g: &Observable,
    x: &PhasePoint,
    system: &HamiltonianSystem,
) -> Result<f64> {
    let d = system.decomposition()?;
    let n = x.n();
    let pi = d.covariant_momenta(&x.q, &x.p);
    let y: Vec<f64> = x.q.iter().chain(&pi).copied().collect();
    let df = f.gradient_flat(&y)?;
    let dg = g.gradient_flat(&y)?;
    let gamma = christoffel_generic(&d.metric, &x.q)?;
    let fs = d.field_strength(&x.q);
    let covariant = |grad: &[f64], mu: usize| {
        let mut s = grad[mu];
        for nu in 0..n {
            for lam in 0..n {
                s += gamma[lam * n * n + mu * n + nu] * pi[lam] * grad[n + nu];
            }
        }
        s
    };
    let mut out = 0.0;
    for mu in 0..n {
        out += covariant(&df, mu) * dg[n + mu] - df[n + mu] * covariant(&dg, mu);
        for nu in 0..n {
            out += d.charge * fs[(mu, nu)] * df[n + mu] * dg[n + nu];
        }
    }
    Ok(out)
}

/// Re-express a function of `(q, Π)` as a function of canonical `(q, p)`.
pub fn covariant_to_canonical(f: &Observable, decomposition: &NaturalDecomposition) -> Observable {
    Observable::from_field(
        f.name.clone(),
        f.degree,
        f.n(),
        DynField::new(InCanonical { f: f.clone(), d: decomposition.clone() }),
    )
}

struct InCanonical {
    f: Observable,
    d: NaturalDecomposition,
}

impl FieldFn for InCanonical {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let n = y.len() / 2;
        let pi = self.d.covariant_momenta(&y[..n], &y[n..]);
        vec![self.f.eval_qp(&y[..n], &pi)]
    }
}

/// `table[s][(i, j)] = {obs_i, obs_j}` at sample `s`.
pub fn bracket_table(observables: &[Observable], samples: &[PhasePoint]) -> Result<Vec<Mat<f64>>> {
    let k = observables.len();
    samples
        .iter()
        .map(|x| {
            let y = x.to_flat();
            let grads = observables.iter().map(|o| o.gradient_flat(&y)).collect::<Result<Vec<_>>>()?;
            let mut m = Mat::zeros(k, k);
            for i in 0..k {
                for j in i + 1..k {
                    let b = symplectic_pairing(&grads[i], &grads[j]);
                    m[(i, j)] = b;
                    m[(j, i)] = -b;
                }
            }
            Ok(m)
        })
        .collect()
}

/// Singular values of the gradient matrix `∂(obs_i)/∂y` at `x`, largest first.
pub fn gradient_singular_values(observables: &[Observable], x: &PhasePoint) -> Result<Vec<f64>> {
    let y = x.to_flat();
    let grads = observables.iter().map(|o| o.gradient_flat(&y)).collect::<Result<Vec<_>>>()?;
    let m = nalgebra::DMatrix::from_fn(grads.len(), y.len(), |i, j| grads[i][j]);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Number of functionally independent observables at `x`: singular values above `rel_tol · σ_max`.
pub fn gradient_rank(observables: &[Observable], x: &PhasePoint, rel_tol: f64) -> Result<usize> {
    let s = gradient_singular_values(observables, x)?;
    let top = s.first().copied().unwrap_or(0.0);
    Ok(s.iter().filter(|&&v| v > rel_tol * top).count())
}

/// `{{f,g},h} + {{g,h},f} + {{h,f},g}` through nested autodiff.
pub fn jacobi_residual(f: &Observable, g: &Observable, h: &Observable, x: &PhasePoint) -> Result<f64> {
    let a = poisson_bracket(&f.bracket(g), h, x)?;
    let b = poisson_bracket(&g.bracket(h), f, x)?;
    let c = poisson_bracket(&h.bracket(f), g, x)?;
    let s = a + b + c;
    if !s.is_finite() {
        return Err(Error::Numerical("Jacobi sum is not finite".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{Degree, PhaseFn};

    struct AngularMomentum(usize);
    impl PhaseFn for AngularMomentum {
        fn eval<T: Scalar>(&self, q: &[T], p: &[T]) -> T {
            let (a, b) = ((self.0 + 1) % 3, (self.0 + 2) % 3);
            q[a] * p[b] - q[b] * p[a]
        }
    }

    #[test]
    fn canonical_pair_and_antisymmetry() {
        let x = PhasePoint::new(vec![0.3, -1.2], vec![0.7, 0.1]).unwrap();
        let q = Observable::coordinate(2, 0, false);
        let p = Observable::coordinate(2, 0, true);
        assert_eq!(poisson_bracket(&q, &p, &x).unwrap(), 1.0);
        assert_eq!(poisson_bracket(&p, &q, &x).unwrap(), -1.0);
        let xf = symplectic_gradient(&q, &x).unwrap();
        assert_eq!(xf, vec![0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn angular_momentum_bracket_matches_finite_difference_oracle() {
        let l: Vec<_> = (0..3).map(|i| Observable::new("L", Degree::Poly(1), 3, AngularMomentum(i))).collect();
        let x = PhasePoint::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]).unwrap();
        let b = poisson_bracket(&l[0], &l[1], &x).unwrap();
        // central differences of L¹ and L² assembled into the bracket
        let fd = |o: &Observable| crate::autodiff::fd_gradient(|y| o.eval_flat(y), &x.to_flat());
        let (g1, g2) = (fd(&l[0]), fd(&l[1]));
        let oracle: f64 = (0..3).map(|m| g1[m] * g2[3 + m] - g1[3 + m] * g2[m]).sum();
        assert!((b - oracle).abs() < 1e-8);
        assert!((b - l[2].value(&x)).abs() < 1e-14);
        assert!((b - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_for_angular_momenta() {
        let l: Vec<_> = (0..3).map(|i| Observable::new("L", Degree::Poly(1), 3, AngularMomentum(i))).collect();
        let x = PhasePoint::new(vec![0.4, -0.2, 1.1], vec![0.3, 0.9, -0.5]).unwrap();
        assert!(jacobi_residual(&l[0], &l[1], &l[2], &x).unwrap().abs() < 1e-13);
    }
}
