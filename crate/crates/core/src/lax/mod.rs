//! Lax pairs `dL/dλ = [L, M]`, isospectrality and trace invariants.

use std::fmt;

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::autodiff::{seed_along, DynField, FieldFn, Scalar};
use crate::dynamics::{
    drift_of_series, integrate_ode, Degree, HamiltonianSystem, IntegratorConfig, Observable, OdeRhs, PhasePoint, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Cx};

/// Eigenvalue gap below which sorted pairing is not trusted.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Matrix-valued functions of the canonical state, written generically.
pub trait LaxFn: Send + Sync + 'static {
    fn lax<T: Scalar>(&self, q: &[T], p: &[T]) -> CMat<T>;
    fn partner<T: Scalar>(&self, q: &[T], p: &[T]) -> CMat<T>;
}

struct Part<F> {
    n: usize,
    f: F,
    which: bool,
}

impl<F: LaxFn> FieldFn for Part<F> {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let (q, p) = y.split_at(self.n);
        if self.which {
            self.f.lax(q, p).to_flat()
        } else {
            self.f.partner(q, p).to_flat()
        }
    }
}

struct ZeroMatrix(usize);

impl FieldFn for ZeroMatrix {
    fn eval<T: Scalar>(&self, _y: &[T]) -> Vec<T> {
        vec![T::zero(); 2 * self.0 * self.0]
    }
}

/// `k × k` Lax pair over a system with `n` degrees of freedom.
#[derive(Clone)]
pub struct LaxPair {
    pub name: String,
    pub n: usize,
    pub size: usize,
    /// `L` is Hermitian at every point, so its spectrum is real.
    pub hermitian: bool,
    l: DynField,
    m: DynField,
}

impl fmt::Debug for LaxPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LaxPair")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("size", &self.size)
            .field("hermitian", &self.hermitian)
            .finish()
    }
}

impl LaxPair {
    pub fn new(name: impl Into<String>, n: usize, size: usize, hermitian: bool, f: impl LaxFn + Clone) -> Self {
        Self {
            name: name.into(),
            n,
            size,
            hermitian,
            l: DynField::new(Part { n, f: f.clone(), which: true }),
            m: DynField::new(Part { n, f, which: false }),
        }
    }

    /// Same `L` with `M` replaced, e.g. by a wrong partner for a negative control.
    pub fn with_partner(mut self, m: impl FieldFn) -> Self {
        self.m = DynField::new(m);
        self
    }

    pub fn with_zero_partner(self) -> Self {
        let k = self.size;
        self.with_partner(ZeroMatrix(k))
    }

    pub fn l<T: Scalar>(&self, y: &[T]) -> CMat<T> {
        CMat::from_flat(self.size, &self.l.eval(y))
    }

    pub fn m<T: Scalar>(&self, y: &[T]) -> CMat<T> {
        CMat::from_flat(self.size, &self.m.eval(y))
    }

    pub fn l_at(&self, x: &PhasePoint) -> CMat<f64> {
        self.l(&x.to_flat())
    }

    /// `Re(c · tr L^j)` as an observable.
    pub fn trace_observable(&self, j: usize, c: f64, name: impl Into<String>) -> Observable {
        Observable::from_field(
            name,
            Degree::Poly(j as u32),
            self.n,
            DynField::new(TracePower { l: self.l.clone(), size: self.size, j, c }),
        )
    }

    fn check(&self, system: &HamiltonianSystem) -> Result<()> {
        if system.n != self.n {
            return Err(Error::Type(format!(
                "Lax pair {} acts on {} degrees of freedom, system {} has {}",
                self.name, self.n, system.name, system.n
            )));
        }
        Ok(())
    }
}

struct TracePower {
    l: DynField,
    size: usize,
    j: usize,
    c: f64,
}

impl FieldFn for TracePower {
    fn eval<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let l = CMat::from_flat(self.size, &self.l.eval(y));
        vec![power_traces(&l, self.j)[self.j - 1].re * self.c]
    }
}

/// `tr L^j` for `j = 1..=j_max`.
pub fn power_traces<T: Scalar>(l: &CMat<T>, j_max: usize) -> Vec<Cx<T>> {
    let mut out = Vec::with_capacity(j_max);
    let mut pw = l.clone();
    for j in 1..=j_max {
        if j > 1 {
            pw = pw.matmul(l);
        }
        out.push(pw.trace());
    }
    out
}

fn commutator<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let ab = a.matmul(b);
    let ba = b.matmul(a);
    CMat::from_fn(a.n, |i, j| ab.get(i, j) - ba.get(i, j))
}

fn cabs(c: Cx<f64>) -> f64 {
    c.re.hypot(c.im)
}

/// Largest entry of `dL/dλ − [L, M]` at one state, with `dL/dλ` from the chain rule along the flow.
pub fn lax_residual_at(pair: &LaxPair, system: &HamiltonianSystem, x: &PhasePoint) -> Result<f64> {
    pair.check(system)?;
    let y = x.to_flat();
    let v = system.vector_field(&y);
    let dl = pair.l(&seed_along(&y, &v));
    let l = CMat::from_fn(pair.size, |i, j| {
        let c = dl.get(i, j);
        Cx::new(c.re.re, c.im.re)
    });
    let rate = CMat::from_fn(pair.size, |i, j| {
        let c = dl.get(i, j);
        Cx::new(c.re.eps, c.im.eps)
    });
    let comm = commutator(&l, &pair.m(&y));
    let r = rate.data.iter().zip(&comm.data).map(|(a, b)| cabs(*a - *b)).fold(0.0, f64::max);
    if !r.is_finite() {
        return Err(Error::Numerical(format!("non-finite Lax residual for {} at {:?}", pair.name, x)));
    }
    Ok(r)
}

/// Maximum Lax-equation residual over the states of `traj`.
pub fn verify_lax_equation(pair: &LaxPair, system: &HamiltonianSystem, traj: &Trajectory) -> Result<f64> {
    traj.states.iter().try_fold(0.0f64, |m, x| Ok(m.max(lax_residual_at(pair, system, x)?)))
}

/// Largest entry of `L − L†`.
pub fn hermiticity_defect(l: &CMat<f64>) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..l.n {
        for j in 0..l.n {
            d = d.max(cabs(l.get(i, j) - l.get(j, i).conj()));
        }
    }
    d
}

fn to_complex(l: &CMat<f64>) -> DMatrix<Complex<f64>> {
    DMatrix::from_fn(l.n, l.n, |i, j| {
        let c = l.get(i, j);
        Complex::new(c.re, c.im)
    })
}

fn sort_spectrum(v: &mut [Cx<f64>]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues sorted by real then imaginary part.
///
/// Hermitian matrices go through the real symmetric embedding
/// `[[A, −B], [B, A]]`, whose spectrum is that of `A + iB` doubled.
pub fn eigenvalues(l: &CMat<f64>, hermitian: bool) -> Result<Vec<Cx<f64>>> {
    let k = l.n;
    if l.data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numerical(format!("non-finite Lax matrix {:?}", l.data)));
    }
    let mut out: Vec<Cx<f64>> = if hermitian {
        let e = DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let c = l.get(i % k, j % k);
            match (i < k, j < k) {
                (true, true) | (false, false) => c.re,
                (true, false) => -c.im,
                (false, true) => c.im,
            }
        });
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev.iter().step_by(2).map(|&v| Cx::real(v)).collect()
    } else {
        let schur = nalgebra::linalg::Schur::try_new(to_complex(l), 1e-14, 10_000)
            .ok_or_else(|| Error::Numerical(format!("Schur decomposition did not converge for {:?}", l.data)))?;
        let (_, t) = schur.unpack();
        (0..k).map(|i| Cx::new(t[(i, i)].re, t[(i, i)].im)).collect()
    };
    sort_spectrum(&mut out);
    Ok(out)
}

/// Elementary symmetric polynomials `e_1..e_k` from power sums by Newton's identities.
pub fn newton_elementary(power_sums: &[Cx<f64>]) -> Vec<Cx<f64>> {
    let mut e = vec![Cx::real(1.0)];
    for k in 1..=power_sums.len() {
        let mut s = Cx::zero();
        for i in 1..=k {
            let term = e[k - i] * power_sums[i - 1];
            s = if i % 2 == 1 { s + term } else { s - term };
        }
        e.push(s.scale(1.0 / k as f64));
    }
    e.remove(0);
    e
}

fn elementary_from_roots(roots: &[Cx<f64>]) -> Vec<Cx<f64>> {
    // coefficients of Π (1 + λ_i t)
    let mut c = vec![Cx::real(1.0)];
    for &r in roots {
        let mut next = c.clone();
        next.push(Cx::zero());
        for i in 0..c.len() {
            next[i + 1] = next[i + 1] + c[i] * r;
        }
        c = next;
    }
    c.remove(0);
    c
}

/// Relative mismatch between the characteristic coefficients from traces
/// (Newton's identities) and from the eigenvalues.
pub fn newton_residual(l: &CMat<f64>, spectrum: &[Cx<f64>]) -> f64 {
    let traces = power_traces(l, l.n);
    let a = newton_elementary(&traces);
    let b = elementary_from_roots(spectrum);
    let scale = l.data.iter().map(|c| cabs(*c)).fold(1.0, f64::max);
    a.iter()
        .zip(&b)
        .enumerate()
        .map(|(k, (x, y))| cabs(*x - *y) / scale.powi(k as i32 + 1))
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralRecord {
    pub times: Vec<f64>,
    /// Sorted eigenvalues `(re, im)` per time.
    pub eigenvalues: Vec<Vec<(f64, f64)>>,
    /// `tr L^j`, `j = 1..=k`, per time.
    pub traces: Vec<Vec<(f64, f64)>>,
    /// Maximum deviation of any sorted eigenvalue from its initial value.
    pub eigenvalue_drift: f64,
    /// Maximum deviation of any trace invariant from its initial value.
    pub trace_drift: f64,
    /// Smallest gap between neighbouring eigenvalues along the trajectory.
    pub min_gap: f64,
    /// Sorted pairing was abandoned because of a near-degeneracy.
    pub fallback: bool,
    /// Largest Newton-identity mismatch over the recorded times.
    pub newton_residual: f64,
    /// Largest `|L − L†|` when the pair is declared Hermitian.
    pub hermiticity_defect: f64,
    /// Largest imaginary part of any trace invariant.
    pub trace_imaginary: f64,
}

impl SpectralRecord {
    /// The drift that is meaningful for this record: eigenvalues unless a
    /// degeneracy forced the trace fallback.
    pub fn drift(&self) -> f64 {
        if self.fallback {
            self.trace_drift
        } else {
            self.eigenvalue_drift
        }
    }
}

/// Spectra and trace invariants of `L` along `traj`.
pub fn spectral_drift(pair: &LaxPair, traj: &Trajectory) -> Result<SpectralRecord> {
    let mut rec = SpectralRecord {
        times: traj.times.clone(),
        eigenvalues: Vec::with_capacity(traj.states.len()),
        traces: Vec::with_capacity(traj.states.len()),
        eigenvalue_drift: 0.0,
        trace_drift: 0.0,
        min_gap: f64::INFINITY,
        fallback: false,
        newton_residual: 0.0,
        hermiticity_defect: 0.0,
        trace_imaginary: 0.0,
    };
    for x in &traj.states {
        if x.n() != pair.n {
            return Err(Error::Type(format!("Lax pair {} expects {} degrees of freedom", pair.name, pair.n)));
        }
        let l = pair.l_at(x);
        let ev = eigenvalues(&l, pair.hermitian)?;
        let tr = power_traces(&l, pair.size);
        for w in ev.windows(2) {
            rec.min_gap = rec.min_gap.min(cabs(w[1] - w[0]));
        }
        rec.newton_residual = rec.newton_residual.max(newton_residual(&l, &ev));
        if pair.hermitian {
            rec.hermiticity_defect = rec.hermiticity_defect.max(hermiticity_defect(&l));
        }
        rec.trace_imaginary = tr.iter().fold(rec.trace_imaginary, |m, c| m.max(c.im.abs()));
        rec.eigenvalues.push(ev.iter().map(|c| (c.re, c.im)).collect());
        rec.traces.push(tr.iter().map(|c| (c.re, c.im)).collect());
    }
    let dev = |rows: &[Vec<(f64, f64)>]| {
        let Some(first) = rows.first() else { return 0.0 };
        rows.iter()
            .flat_map(|r| r.iter().zip(first).map(|(a, b)| (a.0 - b.0).hypot(a.1 - b.1)))
            .fold(0.0, f64::max)
    };
    rec.eigenvalue_drift = dev(&rec.eigenvalues);
    // relative above unit scale so high powers do not dominate
    rec.trace_drift = (0..pair.size)
        .map(|j| {
            let d = drift_of_series(rec.traces.iter().map(|r| r[j].0));
            d.max_abs / rec.traces[0][j].0.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    rec.fallback = rec.min_gap < DEGENERACY_GAP;
    Ok(rec)
}

/// `tr L^j` at one state, `j = 1..=j_max`.
pub fn trace_invariants(pair: &LaxPair, x: &PhasePoint, j_max: usize) -> Result<Vec<Cx<f64>>> {
    if j_max > pair.size {
        return Err(Error::InvalidIndex(format!("trace power {j_max} exceeds Lax size {}", pair.size)));
    }
    Ok(power_traces(&pair.l_at(x), j_max))
}

struct Evolution<'a> {
    pair: &'a LaxPair,
    system: &'a HamiltonianSystem,
}

impl OdeRhs for Evolution<'_> {
    fn dim(&self) -> usize {
        2 * self.system.n + 2 * self.pair.size * self.pair.size
    }
    fn rhs(&self, _t: f64, y: &[f64]) -> Vec<f64> {
        let n2 = 2 * self.system.n;
        let k = self.pair.size;
        let mut out = self.system.vector_field(&y[..n2]);
        let m = self.pair.m(&y[..n2]);
        let g = CMat::from_flat(k, &y[n2..]);
        let mg = m.matmul(&g);
        out.extend(mg.to_flat().iter().map(|v| -v));
        out
    }
    fn in_domain(&self, y: &[f64]) -> bool {
        self.system.in_domain(&y[..2 * self.system.n])
    }
}

/// Integrates `dG/dλ = −MG`, `G(0) = 1`, with the flow and returns the largest
/// entry of `G L(0) G⁻¹ − L(λ)` at `t_final`.
pub fn evolution_check(
    pair: &LaxPair,
    system: &HamiltonianSystem,
    x0: &PhasePoint,
    t_final: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    pair.check(system)?;
    let k = pair.size;
    let mut y0 = x0.to_flat();
    y0.extend(CMat::from_fn(k, |i, j| if i == j { Cx::real(1.0) } else { Cx::zero() }).to_flat());
    let sol = integrate_ode(&Evolution { pair, system }, 0.0, &y0, t_final, cfg)?;
    let y1 = sol.states.last().expect("solution holds the initial state");
    let n2 = 2 * system.n;
    let g = to_complex(&CMat::from_flat(k, &y1[n2..]));
    let ginv = g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("evolution matrix became singular".into()))?;
    let predicted = &g * to_complex(&pair.l_at(x0)) * ginv;
    let actual = to_complex(&pair.l(&y1[..n2]));
    Ok((predicted - actual).iter().map(|c| c.norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PhaseFn;

    /// Free particles: `L = diag(p)`, `M = 0`.
    #[derive(Clone)]
    struct Free;
    impl LaxFn for Free {
        fn lax<T: Scalar>(&self, _q: &[T], p: &[T]) -> CMat<T> {
            CMat::from_fn(p.len(), |i, j| if i == j { Cx::real(p[i]) } else { Cx::zero() })
        }
        fn partner<T: Scalar>(&self, _q: &[T], p: &[T]) -> CMat<T> {
            CMat::zeros(p.len())
        }
    }

    struct Kinetic;
    impl PhaseFn for Kinetic {
        fn eval<T: Scalar>(&self, _q: &[T], p: &[T]) -> T {
            (p[0] * p[0] + p[1] * p[1]) * 0.5
        }
    }

    #[test]
    fn free_pair_is_exact() {
        let sys = HamiltonianSystem::new("free", Observable::new("H", Degree::Poly(2), 2, Kinetic));
        let pair = LaxPair::new("free", 2, 2, true, Free);
        let x = PhasePoint::new(vec![0.1, 0.2], vec![0.7, -1.1]).unwrap();
        assert_eq!(lax_residual_at(&pair, &sys, &x).unwrap(), 0.0);
        let tr = trace_invariants(&pair, &x, 2).unwrap();
        assert!((tr[0].re - (0.7 - 1.1)).abs() < 1e-15);
        assert!((tr[1].re - (0.49 + 1.21)).abs() < 1e-15);
        assert!(trace_invariants(&pair, &x, 3).is_err());
    }

    #[test]
    fn newton_identities_against_roots() {
        let roots = [Cx::new(1.0, 0.5), Cx::real(-2.0), Cx::new(0.3, -1.0)];
        let mut p = vec![Cx::zero(); 3];
        for j in 0..3 {
            for r in roots {
                let mut pw = Cx::real(1.0);
                for _ in 0..=j {
                    pw = pw * r;
                }
                p[j] = p[j] + pw;
            }
        }
        let a = newton_elementary(&p);
        let b = elementary_from_roots(&roots);
        for (x, y) in a.iter().zip(&b) {
            assert!(cabs(*x - *y) < 1e-12);
        }
        // e_1 is the sum, e_3 the product
        assert!(cabs(b[0] - Cx::new(-0.7, -0.5)) < 1e-15);
    }

    #[test]
    fn hermitian_and_general_spectra_agree() {
        // [[2, i], [−i, 2]] has eigenvalues 1 and 3
        let l = CMat::from_fn(2, |i, j| match (i, j) {
            (0, 1) => Cx::new(0.0, 1.0),
            (1, 0) => Cx::new(0.0, -1.0),
            _ => Cx::real(2.0),
        });
        assert_eq!(hermiticity_defect(&l), 0.0);
        let h = eigenvalues(&l, true).unwrap();
        let g = eigenvalues(&l, false).unwrap();
        for (a, b) in h.iter().zip(&g) {
            assert!(cabs(*a - *b) < 1e-12);
        }
        assert!((h[0].re - 1.0).abs() < 1e-14 && (h[1].re - 3.0).abs() < 1e-14);
        assert!(newton_residual(&l, &h) < 1e-14);
    }

    #[test]
    fn non_finite_matrix_is_numerical_error() {
        let l = CMat::from_fn(2, |_, _| Cx::real(f64::NAN));
        assert!(matches!(eigenvalues(&l, false), Err(Error::Numerical(_))));
    }
}
