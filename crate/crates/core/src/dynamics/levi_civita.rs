use crate::autodiff::seed;
use crate::error::{Error, Result};

use super::phase::{Observable, PhasePoint};

/// Levi-Civita separability expression `L_{μν}(H)` at `x` (no sums):
///
/// `H_μ H_ν H^{μν} + H^μ H^ν H_{μν} − H_μ H^ν H^μ_ν − H^μ H_ν H_μ^ν`
///
/// with lower indices for `∂/∂q` and upper for `∂/∂p`.
pub fn levi_civita_residual(h: &Observable, x: &PhasePoint, mu: usize, nu: usize) -> Result<f64> {
    let n = x.n();
    if mu == nu {
        return Err(Error::InvalidIndex(format!("Levi-Civita conditions need μ ≠ ν, got {mu} twice")));
    }
    if mu >= n || nu >= n {
        return Err(Error::InvalidIndex(format!("index out of range for {n} degrees of freedom")));
    }
    let y = x.to_flat();
    let grad = h.gradient_flat(&y)?;
    let second = |a: usize, b: usize| h.field().eval(&seed(&seed(&y, a), b))[0].eps.eps;
    let (qm, qn, pm, pn) = (mu, nu, n + mu, n + nu);
    Ok(grad[qm] * grad[qn] * second(pm, pn) + grad[pm] * grad[pn] * second(qm, qn)
        - grad[qm] * grad[pn] * second(pm, qn)
        - grad[pm] * grad[qn] * second(qm, pn))
}

/// Largest `|L_{μν}|` over all pairs `μ < ν`.
pub fn max_levi_civita_residual(h: &Observable, x: &PhasePoint) -> Result<f64> {
    let n = x.n();
    let mut m: f64 = 0.0;
    for mu in 0..n {
        for nu in mu + 1..n {
            m = m.max(levi_civita_residual(h, x, mu, nu)?.abs());
        }
    }
    Ok(m)
}
