//! Sampled oracles for `F(x) = E[f(x; xi)] + E[h(x; xi)]` over a finite,
//! uniformly sampled index set `{0, .., m-1}`.

use crate::error::{ensure, Result, SspgError};
use crate::linalg::{axpy, dist_sq, dot, norm, norm_sq};

/// Index of one component of the finite sample space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampleIndex(pub usize);

impl SampleIndex {
    pub fn checked(xi: usize, m: usize) -> Result<Self> {
        ensure(xi < m, || format!("sample index {xi} out of range 0..{m}"))?;
        Ok(SampleIndex(xi))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

/// Smooth components `f(.; xi)`, each with an `L_f`-Lipschitz gradient.
pub trait SmoothOracle: Sync {
    fn dim(&self) -> usize;
    fn num_samples(&self) -> usize;
    fn f_value(&self, x: &[f64], xi: SampleIndex) -> f64;
    fn grad_into(&self, x: &[f64], xi: SampleIndex, out: &mut [f64]);

    fn grad(&self, x: &[f64], xi: SampleIndex) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.grad_into(x, xi, &mut g);
        g
    }

    /// `f(x) = (1/m) sum_xi f(x; xi)`
    fn full_value(&self, x: &[f64]) -> f64 {
        let m = self.num_samples();
        (0..m).map(|i| self.f_value(x, SampleIndex(i))).sum::<f64>() / m as f64
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let m = self.num_samples();
        let mut acc = vec![0.0; x.len()];
        let mut g = vec![0.0; x.len()];
        for i in 0..m {
            self.grad_into(x, SampleIndex(i), &mut g);
            axpy(1.0, &g, &mut acc);
        }
        acc.iter_mut().for_each(|v| *v /= m as f64);
        acc
    }
}

/// Nonsmooth components `h(.; xi)` accessed through their proximal maps.
pub trait ProxOracle: Sync {
    fn num_samples(&self) -> usize;

    /// `h(x; xi)`, `+inf` outside the domain.
    fn h_value(&self, x: &[f64], xi: SampleIndex) -> f64;

    /// `argmin_z h(z; xi) + |z - y|^2 / (2 mu)`
    fn prox_into(&self, y: &[f64], xi: SampleIndex, mu: f64, out: &mut [f64]);

    fn prox(&self, y: &[f64], xi: SampleIndex, mu: f64) -> Vec<f64> {
        let mut z = vec![0.0; y.len()];
        self.prox_into(y, xi, mu, &mut z);
        z
    }

    /// One member of `∂h(x; xi)` (the minimal-norm one where it matters).
    fn subgrad(&self, x: &[f64], xi: SampleIndex) -> Vec<f64>;

    /// Distance from `v` to `∂h(z; xi)`.
    ///
    /// The default measures the distance to the single selected subgradient;
    /// oracles with set-valued subdifferentials override it.
    fn subdiff_distance(&self, z: &[f64], xi: SampleIndex, v: &[f64]) -> f64 {
        dist_sq(&self.subgrad(z, xi), v).sqrt()
    }

    /// Prox of the averaged `h = (1/m) sum_xi h(.; xi)`, when the oracle can compute it.
    fn full_prox(&self, _y: &[f64], _mu: f64) -> Option<Vec<f64>> {
        None
    }

    /// Distance to the common domain of all components, for feasibility families.
    fn dist_to_feasible(&self, _x: &[f64]) -> Option<f64> {
        None
    }
}

impl<T: SmoothOracle + ?Sized> SmoothOracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn num_samples(&self) -> usize {
        (**self).num_samples()
    }
    fn f_value(&self, x: &[f64], xi: SampleIndex) -> f64 {
        (**self).f_value(x, xi)
    }
    fn grad_into(&self, x: &[f64], xi: SampleIndex, out: &mut [f64]) {
        (**self).grad_into(x, xi, out)
    }
}

impl<T: ProxOracle + ?Sized> ProxOracle for &T {
    fn num_samples(&self) -> usize {
        (**self).num_samples()
    }
    fn h_value(&self, x: &[f64], xi: SampleIndex) -> f64 {
        (**self).h_value(x, xi)
    }
    fn prox_into(&self, y: &[f64], xi: SampleIndex, mu: f64, out: &mut [f64]) {
        (**self).prox_into(y, xi, mu, out)
    }
    fn subgrad(&self, x: &[f64], xi: SampleIndex) -> Vec<f64> {
        (**self).subgrad(x, xi)
    }
    fn subdiff_distance(&self, z: &[f64], xi: SampleIndex, v: &[f64]) -> f64 {
        (**self).subdiff_distance(z, xi, v)
    }
    fn full_prox(&self, y: &[f64], mu: f64) -> Option<Vec<f64>> {
        (**self).full_prox(y, mu)
    }
    fn dist_to_feasible(&self, x: &[f64]) -> Option<f64> {
        (**self).dist_to_feasible(x)
    }
}

/// `f ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroSmooth {
    pub dim: usize,
    pub samples: usize,
}

impl SmoothOracle for ZeroSmooth {
    fn dim(&self) -> usize {
        self.dim
    }
    fn num_samples(&self) -> usize {
        self.samples
    }
    fn f_value(&self, _x: &[f64], _xi: SampleIndex) -> f64 {
        0.0
    }
    fn grad_into(&self, _x: &[f64], _xi: SampleIndex, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// `h ≡ 0`; the prox is the identity.
#[derive(Clone, Copy, Debug)]
pub struct ZeroProx {
    pub samples: usize,
}

impl ProxOracle for ZeroProx {
    fn num_samples(&self) -> usize {
        self.samples
    }
    fn h_value(&self, _x: &[f64], _xi: SampleIndex) -> f64 {
        0.0
    }
    fn prox_into(&self, y: &[f64], _xi: SampleIndex, _mu: f64, out: &mut [f64]) {
        out.copy_from_slice(y);
    }
    fn subgrad(&self, x: &[f64], _xi: SampleIndex) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn full_prox(&self, y: &[f64], _mu: f64) -> Option<Vec<f64>> {
        Some(y.to_vec())
    }
}

/// A sample-independent regularizer: every index sees component `fixed`
/// of the wrapped oracle.
#[derive(Clone, Copy, Debug)]
pub struct SharedProx<P> {
    pub inner: P,
    pub fixed: SampleIndex,
    pub samples: usize,
}

impl<P: ProxOracle> ProxOracle for SharedProx<P> {
    fn num_samples(&self) -> usize {
        self.samples
    }
    fn h_value(&self, x: &[f64], _xi: SampleIndex) -> f64 {
        self.inner.h_value(x, self.fixed)
    }
    fn prox_into(&self, y: &[f64], _xi: SampleIndex, mu: f64, out: &mut [f64]) {
        self.inner.prox_into(y, self.fixed, mu, out)
    }
    fn subgrad(&self, x: &[f64], _xi: SampleIndex) -> Vec<f64> {
        self.inner.subgrad(x, self.fixed)
    }
    fn subdiff_distance(&self, z: &[f64], _xi: SampleIndex, v: &[f64]) -> f64 {
        self.inner.subdiff_distance(z, self.fixed, v)
    }
    fn full_prox(&self, y: &[f64], mu: f64) -> Option<Vec<f64>> {
        Some(self.inner.prox(y, self.fixed, mu))
    }
    fn dist_to_feasible(&self, x: &[f64]) -> Option<f64> {
        self.inner.dist_to_feasible(x)
    }
}

fn check_compatible<S: SmoothOracle + ?Sized, P: ProxOracle + ?Sized>(
    smooth: &S,
    prox: &P,
) -> Result<()> {
    ensure(smooth.num_samples() == prox.num_samples(), || {
        format!(
            "smooth oracle has {} samples, prox oracle has {}",
            smooth.num_samples(),
            prox.num_samples()
        )
    })?;
    ensure(smooth.num_samples() >= 1, || "empty sample space".into())
}

/// `F(x) = (1/m) sum_xi [f(x; xi) + h(x; xi)]`; `+inf` if any `h(x; xi)` is.
pub fn eval_full_objective<S, P>(smooth: &S, prox: &P, x: &[f64]) -> Result<f64>
where
    S: SmoothOracle + ?Sized,
    P: ProxOracle + ?Sized,
{
    check_compatible(smooth, prox)?;
    if x.len() != smooth.dim() {
        return Err(SspgError::DimensionMismatch {
            expected: smooth.dim(),
            actual: x.len(),
        });
    }
    let m = smooth.num_samples();
    let total: f64 = (0..m)
        .map(|i| {
            let xi = SampleIndex(i);
            smooth.f_value(x, xi) + prox.h_value(x, xi)
        })
        .sum();
    Ok(total / m as f64)
}

/// Moreau envelope `h_mu(x; xi)` and the prox point that attains it.
pub fn moreau_envelope<P: ProxOracle + ?Sized>(
    prox: &P,
    x: &[f64],
    xi: SampleIndex,
    mu: f64,
) -> Result<(f64, Vec<f64>)> {
    ensure(mu > 0.0 && mu.is_finite(), || {
        format!("mu must be positive, got {mu}")
    })?;
    let z = prox.prox(x, xi, mu);
    let h = prox.h_value(&z, xi);
    if !h.is_finite() {
        return Err(SspgError::Infeasible { xi: xi.0 });
    }
    Ok((h + dist_sq(&z, x) / (2.0 * mu), z))
}

/// Stationarity residual of the prox subproblem at `z`:
/// `dist(0, ∂h(z; xi) + (z - y)/mu)`.
pub fn prox_optimality_residual<P: ProxOracle + ?Sized>(
    prox: &P,
    y: &[f64],
    z: &[f64],
    xi: SampleIndex,
    mu: f64,
) -> Result<f64> {
    ensure(mu > 0.0, || format!("mu must be positive, got {mu}"))?;
    if !prox.h_value(z, xi).is_finite() {
        return Err(SspgError::Infeasible { xi: xi.0 });
    }
    let v: Vec<f64> = y.iter().zip(z).map(|(yi, zi)| (yi - zi) / mu).collect();
    Ok(prox.subdiff_distance(z, xi, &v))
}

/// Relative threshold below which `a^T z` is treated as zero when picking
/// from the subdifferential of `|a^T z|`.
pub const KINK_TOL: f64 = 1e-10;

/// `true` when `a^T z` sits on the kink of `|.|` up to rounding.
pub fn on_kink(a: &[f64], z: &[f64]) -> bool {
    dot(a, z).abs() <= KINK_TOL * norm(a) * norm(z).max(1.0)
}

/// Distance from `v` to `∂(c |a^T .|)(z) = { c s a : s ∈ sgn(a^T z) }`.
pub fn abs_linear_subdiff_distance(c: f64, a: &[f64], z: &[f64], v: &[f64]) -> f64 {
    let aa = norm_sq(a);
    if c == 0.0 || aa == 0.0 {
        return norm(v);
    }
    let s = if on_kink(a, z) {
        (dot(v, a) / (c * aa)).clamp(-1.0, 1.0)
    } else {
        dot(a, z).signum()
    };
    v.iter()
        .zip(a)
        .map(|(vi, ai)| (vi - c * s * ai).powi(2))
        .sum::<f64>()
        .sqrt()
}
