//! Regularized cosparse representation
//!
//! ```text
//! min_x (1/2m) |T x - y|^2 + lambda |Delta x|_1 + (alpha/2) |x|^2
//! ```
//!
//! split per row `xi` into `f(x; xi) = (1/2)(T_xi x - y_xi)^2 + (alpha/2)|x|^2`
//! and `h(x; xi) = m lambda |Delta_xi x|`. Both `T` and `Delta` are indexed by
//! the same sample, so `Delta` has exactly `m` rows.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::SymmetricEigen;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::baseline::prox_l1_composite_warm;
use crate::constants::TheoryConstants;
use crate::error::{ensure, Result, SspgError};
use crate::linalg::{axpy, dot, norm, norm_sq, Matrix};
use crate::oracle::{abs_linear_subdiff_distance, on_kink, ProxOracle, SampleIndex, SmoothOracle};

/// Relative tolerance on the prox branch test `|beta| <= m lambda mu`.
pub const BRANCH_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SrProblem {
    t: Matrix,
    y: Vec<f64>,
    delta: Matrix,
    lambda: f64,
    alpha: f64,
    seed: Option<u64>,
    delta_row_sq: Vec<f64>,
    delta_norm_sq: f64,
}

impl SrProblem {
    pub fn new(t: Matrix, y: Vec<f64>, delta: Matrix, lambda: f64, alpha: f64) -> Result<Self> {
        let (m, n) = (t.rows(), t.cols());
        ensure(m >= 1 && n >= 1, || "T must be non-empty".into())?;
        ensure(y.len() == m, || {
            format!("y has {} entries, T has {m} rows", y.len())
        })?;
        ensure(delta.rows() == m && delta.cols() == n, || {
            format!(
                "Delta must be {m}x{n} (one row per sample), got {}x{}",
                delta.rows(),
                delta.cols()
            )
        })?;
        ensure(lambda >= 0.0 && lambda.is_finite(), || {
            format!("lambda must be >= 0, got {lambda}")
        })?;
        ensure(alpha >= 0.0 && alpha.is_finite(), || {
            format!("alpha must be >= 0, got {alpha}")
        })?;
        let delta_row_sq: Vec<f64> = (0..m).map(|i| norm_sq(delta.row(i))).collect();
        if let Some(i) = delta_row_sq.iter().position(|&s| s.sqrt() < 1e-12) {
            return Err(SspgError::InvalidArgument(format!("Delta row {i} is zero")));
        }
        let delta_norm_sq = delta.power_norm_sq(20);
        Ok(SrProblem {
            t,
            y,
            delta,
            lambda,
            alpha,
            seed: None,
            delta_row_sq,
            delta_norm_sq,
        })
    }

    pub fn n(&self) -> usize {
        self.t.cols()
    }

    pub fn m(&self) -> usize {
        self.t.rows()
    }

    pub fn t(&self) -> &Matrix {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn delta(&self) -> &Matrix {
        &self.delta
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Power-iteration estimate of `|Delta|_2^2` (20 iterations, all-ones start).
    pub fn delta_norm_sq(&self) -> f64 {
        self.delta_norm_sq
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `m lambda`, the weight of each sampled `|Delta_xi x|`.
    pub fn h_weight(&self) -> f64 {
        self.m() as f64 * self.lambda
    }

    /// `(1/2m)|Tx - y|^2 + lambda |Delta x|_1 + (alpha/2)|x|^2`, evaluated densely.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let m = self.m() as f64;
        let r = self.t.mul_vec(x);
        let fit: f64 = r.iter().zip(&self.y).map(|(a, b)| (a - b).powi(2)).sum();
        let l1: f64 = self.delta.mul_vec(x).iter().map(|v| v.abs()).sum();
        fit / (2.0 * m) + self.lambda * l1 + 0.5 * self.alpha * norm_sq(x)
    }

    /// `(1/m) T^T (T x - y) + alpha x`
    pub fn smooth_full_grad(&self, x: &[f64]) -> Vec<f64> {
        let m = self.m() as f64;
        let mut r = self.t.mul_vec(x);
        r.iter_mut()
            .zip(&self.y)
            .for_each(|(ri, yi)| *ri = (*ri - yi) / m);
        let mut g = self.t.tr_mul_vec(&r);
        axpy(self.alpha, x, &mut g);
        g
    }

    pub fn sr_grad(&self, x: &[f64], xi: SampleIndex) -> Vec<f64> {
        self.grad(x, xi)
    }

    pub fn sr_prox(&self, y: &[f64], xi: SampleIndex, mu: f64) -> Vec<f64> {
        self.prox(y, xi, mu)
    }

    /// `L_f = max_xi |T_xi|^2 + alpha` and `sigma_f = alpha + lambda_min(T^T T / m)`.
    pub fn sr_constants(&self) -> TheoryConstants {
        let lipschitz = (0..self.m())
            .map(|i| norm_sq(self.t.row(i)))
            .fold(0.0, f64::max)
            + self.alpha;
        let eig = SymmetricEigen::new(self.t.gram(self.m() as f64))
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let sigma = self.alpha + eig.max(0.0);
        TheoryConstants::new(lipschitz, sigma.max(self.alpha))
    }

    /// The loose modulus `alpha`, valid without any spectral information.
    pub fn strong_convexity_floor(&self) -> f64 {
        self.alpha
    }

    /// Zero-mean subgradient representation at `x_star` and the induced
    /// `Sigma = (2/m) sum_xi |grad f(x*; xi) + m lambda s_xi Delta_xi^T|^2`.
    ///
    /// Rows with `Delta_xi x* != 0` keep `s_xi = sgn(Delta_xi x*)`; the remaining
    /// coefficients are chosen in `[-1, 1]` to make the average vanish, by
    /// projected gradient on the box-constrained least-squares problem.
    pub fn zero_mean_subgradient_sigma(&self, x_star: &[f64], tol: f64) -> Result<SigmaEstimate> {
        ensure(x_star.len() == self.n(), || {
            "x_star has the wrong dimension".into()
        })?;
        ensure(tol > 0.0, || "tol must be positive".into())?;
        let m = self.m();
        let n = self.n();
        let c = self.h_weight();
        let scale = norm(x_star).max(1.0);

        let grads: Vec<Vec<f64>> = (0..m).map(|i| self.grad(x_star, SampleIndex(i))).collect();
        let mut coeffs = vec![0.0; m];
        let mut free = Vec::new();
        // b = -(sum_xi grad_xi + sum_fixed c s_xi Delta_xi)
        let mut b = vec![0.0; n];
        for (i, g) in grads.iter().enumerate() {
            axpy(-1.0, g, &mut b);
            let d = self.delta.row(i);
            let dz = dot(d, x_star);
            if c > 0.0 && dz.abs() <= 1e-7 * norm(d) * scale {
                free.push(i);
            } else if c > 0.0 {
                coeffs[i] = dz.signum();
                axpy(-c * coeffs[i], d, &mut b);
            }
        }

        if !free.is_empty() {
            let a_rows: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| self.delta.row(i).iter().map(|v| c * v).collect())
                .collect();
            // A = a_rows^T (n x q); minimize (1/2)|A s - b|^2 over the box
            let a = Matrix::from_rows(&a_rows)?;
            let s = box_least_squares(&a, &b, 1e-3 * tol * m as f64, 200_000);
            for (j, &i) in free.iter().enumerate() {
                coeffs[i] = s[j];
            }
        }

        let mut sum = vec![0.0; n];
        let mut sq = 0.0;
        let mut g = vec![0.0; n];
        for (i, grad) in grads.iter().enumerate() {
            g.copy_from_slice(grad);
            axpy(c * coeffs[i], self.delta.row(i), &mut g);
            sq += norm_sq(&g);
            axpy(1.0, &g, &mut sum);
        }
        let certificate = norm(&sum) / m as f64;
        let sigma = 2.0 * sq / m as f64;
        if certificate.is_nan() || certificate > tol {
            return Err(SspgError::RepresentationNotFound { tol, certificate });
        }
        Ok(SigmaEstimate {
            sigma,
            certificate,
            coefficients: coeffs,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_instance(self, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_instance(path.as_ref())
    }
}

/// Result of [`SrProblem::zero_mean_subgradient_sigma`].
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaEstimate {
    pub sigma: f64,
    /// Norm of the averaged subgradient; zero for an exact representation.
    pub certificate: f64,
    /// `s_xi` per sample.
    pub coefficients: Vec<f64>,
}

/// `min_{|s|_inf <= 1} (1/2) |A^T s - b|^2` for `A` stored with one row per variable.
///
/// Accelerated projected gradient with function-value restart; stops once the
/// residual `|A^T s - b|` drops below `target` or stagnates.
fn box_least_squares(a: &Matrix, b: &[f64], target: f64, cap: usize) -> Vec<f64> {
    let q = a.rows();
    let lip = a.spectral_norm_sq().max(f64::MIN_POSITIVE);
    let step = 1.0 / lip;
    let mut s = vec![0.0; q];
    let mut s_prev = s.clone();
    let mut w = s.clone();
    let mut theta: f64 = 1.0;
    let resid = |s: &[f64]| {
        let mut r = a.tr_mul_vec(s);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
        r
    };
    let mut best = s.clone();
    let mut best_val = norm(&resid(&s));
    let mut f_prev = best_val;
    for _ in 0..cap {
        if best_val <= target {
            break;
        }
        let r = resid(&w);
        let grad = a.mul_vec(&r);
        s_prev.copy_from_slice(&s);
        for j in 0..q {
            s[j] = (w[j] - step * grad[j]).clamp(-1.0, 1.0);
        }
        let val = norm(&resid(&s));
        if val < best_val {
            best_val = val;
            best.copy_from_slice(&s);
        }
        if val > f_prev {
            // restart momentum
            theta = 1.0;
            w.copy_from_slice(&s);
        } else {
            let theta_next = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
            let beta = (theta - 1.0) / theta_next;
            for j in 0..q {
                w[j] = s[j] + beta * (s[j] - s_prev[j]);
            }
            theta = theta_next;
        }
        f_prev = val;
    }
    best
}

impl SmoothOracle for SrProblem {
    fn dim(&self) -> usize {
        self.n()
    }

    fn num_samples(&self) -> usize {
        self.m()
    }

    fn f_value(&self, x: &[f64], xi: SampleIndex) -> f64 {
        let r = dot(self.t.row(xi.0), x) - self.y[xi.0];
        0.5 * r * r + 0.5 * self.alpha * norm_sq(x)
    }

    /// `T_xi^T (T_xi x - y_xi) + alpha x`, without forming the rank-one matrix.
    fn grad_into(&self, x: &[f64], xi: SampleIndex, out: &mut [f64]) {
        let row = self.t.row(xi.0);
        let r = dot(row, x) - self.y[xi.0];
        for ((o, &ti), &xj) in out.iter_mut().zip(row).zip(x) {
            *o = r * ti + self.alpha * xj;
        }
    }

    fn full_value(&self, x: &[f64]) -> f64 {
        let m = self.m() as f64;
        let r = self.t.mul_vec(x);
        let fit: f64 = r.iter().zip(&self.y).map(|(a, b)| (a - b).powi(2)).sum();
        fit / (2.0 * m) + 0.5 * self.alpha * norm_sq(x)
    }

    fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        self.smooth_full_grad(x)
    }
}

impl ProxOracle for SrProblem {
    fn num_samples(&self) -> usize {
        self.m()
    }

    fn h_value(&self, x: &[f64], xi: SampleIndex) -> f64 {
        self.h_weight() * dot(self.delta.row(xi.0), x).abs()
    }

    /// Closed form: with `beta = Delta_xi y / |Delta_xi|^2`, project onto
    /// `Delta_xi z = 0` when `|beta| <= m lambda mu`, otherwise shift by
    /// `mu m lambda sgn(beta) Delta_xi^T`.
    fn prox_into(&self, y: &[f64], xi: SampleIndex, mu: f64, out: &mut [f64]) {
        let d = self.delta.row(xi.0);
        let beta = dot(d, y) / self.delta_row_sq[xi.0];
        let threshold = self.h_weight() * mu;
        let shift = if beta.abs() <= threshold * (1.0 + BRANCH_RTOL) {
            beta
        } else {
            threshold * beta.signum()
        };
        for ((o, &yi), &di) in out.iter_mut().zip(y).zip(d) {
            *o = yi - shift * di;
        }
    }

    fn subgrad(&self, x: &[f64], xi: SampleIndex) -> Vec<f64> {
        let d = self.delta.row(xi.0);
        let s = if on_kink(d, x) {
            0.0
        } else {
            dot(d, x).signum()
        };
        d.iter().map(|v| self.h_weight() * s * v).collect()
    }

    fn subdiff_distance(&self, z: &[f64], xi: SampleIndex, v: &[f64]) -> f64 {
        abs_linear_subdiff_distance(self.h_weight(), self.delta.row(xi.0), z, v)
    }

    /// Prox of `lambda |Delta .|_1`, via the dual solver.
    fn full_prox(&self, y: &[f64], mu: f64) -> Option<Vec<f64>> {
        let out = prox_l1_composite_warm(
            &self.delta,
            self.lambda * mu,
            y,
            1e-12,
            100_000,
            None,
            Some(self.delta_norm_sq),
        )
        .ok()?;
        Some(out.z)
    }
}

/// Random instance with independent standard normal `T`, `Delta`, `y` and `p = m`.
pub fn generate_sr_instance(
    n: usize,
    m: usize,
    alpha: f64,
    lambda: f64,
    seed: u64,
) -> Result<SrProblem> {
    ensure(n >= 1 && m >= 1, || {
        format!("n and m must be positive, got n={n}, m={m}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw =
        |len: usize| -> Vec<f64> { (0..len).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let t = Matrix::from_row_major(m, n, draw(m * n))?;
    let mut rows = Vec::with_capacity(m);
    while rows.len() < m {
        let row = draw(n);
        if norm(&row) >= 1e-12 {
            rows.push(row);
        }
    }
    let delta = Matrix::from_rows(&rows)?;
    let y = draw(m);
    let mut p = SrProblem::new(t, y, delta, lambda, alpha)?;
    p.seed = Some(seed);
    Ok(p)
}

pub const INSTANCE_MAGIC: &[u8; 8] = b"SSPGSR\0\0";
pub const INSTANCE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceHeader {
    n: usize,
    m: usize,
    p: usize,
    lambda: f64,
    alpha: f64,
    seed: Option<u64>,
    format_version: u32,
}

/// Layout: 8-byte magic, u64 LE header length, JSON header, then `T` (m x n),
/// `y` (m) and `Delta` (p x n) as row-major little-endian f64.
fn write_instance(p: &SrProblem, path: &Path) -> Result<()> {
    let header = InstanceHeader {
        n: p.n(),
        m: p.m(),
        p: p.delta.rows(),
        lambda: p.lambda,
        alpha: p.alpha,
        seed: p.seed,
        format_version: INSTANCE_FORMAT_VERSION,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let file = File::create(path).map_err(|e| SspgError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| SspgError::io(path, e));
    put(INSTANCE_MAGIC)?;
    put(&(json.len() as u64).to_le_bytes())?;
    put(&json)?;
    for v in p.t.as_slice().iter().chain(&p.y).chain(p.delta.as_slice()) {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| SspgError::io(path, e))
}

fn read_instance(path: &Path) -> Result<SrProblem> {
    let file = File::open(path).map_err(|e| SspgError::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| SspgError::io(path, e))?;
    if &magic != INSTANCE_MAGIC {
        return Err(SspgError::format(
            path,
            "not an SR instance file (bad magic)",
        ));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|e| SspgError::io(path, e))?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(SspgError::format(path, "header length is implausible"));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|e| SspgError::io(path, e))?;
    let h: InstanceHeader = serde_json::from_slice(&json)
        .map_err(|e| SspgError::format(path, format!("bad header: {e}")))?;
    if h.format_version != INSTANCE_FORMAT_VERSION {
        return Err(SspgError::format(
            path,
            format!("unsupported format_version {}", h.format_version),
        ));
    }
    let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf).map_err(|e| SspgError::io(path, e))?;
        Ok(buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    };
    let t = Matrix::from_row_major(h.m, h.n, read_f64s(h.m * h.n)?)?;
    let y = read_f64s(h.m)?;
    let delta = Matrix::from_row_major(h.p, h.n, read_f64s(h.p * h.n)?)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| SspgError::io(path, e))? != 0 {
        return Err(SspgError::format(path, "trailing bytes after payload"));
    }
    let mut p = SrProblem::new(t, y, delta, h.lambda, h.alpha)?;
    p.seed = h.seed;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row_problem(
        t: Vec<Vec<f64>>,
        y: Vec<f64>,
        d: Vec<Vec<f64>>,
        lambda: f64,
        alpha: f64,
    ) -> SrProblem {
        SrProblem::new(
            Matrix::from_rows(&t).unwrap(),
            y,
            Matrix::from_rows(&d).unwrap(),
            lambda,
            alpha,
        )
        .unwrap()
    }

    #[test]
    fn shapes_follow_arguments() {
        let p = generate_sr_instance(20, 80, 0.5, 5.0, 7).unwrap();
        assert_eq!((p.t().rows(), p.t().cols()), (80, 20));
        assert_eq!((p.delta().rows(), p.delta().cols()), (80, 20));
        assert_eq!(p.y().len(), 80);
        let p = generate_sr_instance(50, 300, 0.2, 5e-4, 1).unwrap();
        assert_eq!((p.t().rows(), p.t().cols()), (300, 50));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_sr_instance(6, 10, 0.5, 1.0, 3).unwrap();
        let b = generate_sr_instance(6, 10, 0.5, 1.0, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_sr_instance(6, 10, 0.5, 1.0, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_delta_row_rejected() {
        let r = SrProblem::new(
            Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap(),
            vec![1.0],
            Matrix::from_rows(&[vec![0.0, 0.0]]).unwrap(),
            1.0,
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn p_must_equal_m() {
        let r = SrProblem::new(
            Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
            vec![1.0, 1.0],
            Matrix::from_rows(&[vec![1.0]]).unwrap(),
            1.0,
            1.0,
        );
        assert!(r.is_err());
    }

    #[test]
    fn grad_at_zero_and_at_interpolation() {
        let p = row_problem(
            vec![vec![1.0, 2.0]],
            vec![3.0],
            vec![vec![1.0, 1.0]],
            1.0,
            0.0,
        );
        assert_eq!(p.sr_grad(&[0.0, 0.0], SampleIndex(0)), vec![-3.0, -6.0]);
        assert_eq!(p.sr_grad(&[1.0, 1.0], SampleIndex(0)), vec![0.0, 0.0]);
    }

    #[test]
    fn prox_kernel_point_unchanged() {
        let p = row_problem(
            vec![vec![1.0, 0.0]],
            vec![0.0],
            vec![vec![1.0, -1.0]],
            1.0,
            1.0,
        );
        let y = [2.0, 2.0];
        assert_eq!(p.sr_prox(&y, SampleIndex(0), 0.7), y.to_vec());
    }

    #[test]
    fn prox_scalar_soft_threshold() {
        // m lambda mu = 2
        let p = row_problem(vec![vec![1.0]], vec![0.0], vec![vec![1.0]], 2.0, 1.0);
        assert_eq!(p.sr_prox(&[5.0], SampleIndex(0), 1.0), vec![3.0]);
        assert_eq!(p.sr_prox(&[-5.0], SampleIndex(0), 1.0), vec![-3.0]);
        assert_eq!(p.sr_prox(&[1.5], SampleIndex(0), 1.0), vec![0.0]);
    }

    #[test]
    fn prox_continuous_at_branch_boundary() {
        let p = row_problem(
            vec![vec![1.0, 0.0]],
            vec![0.0],
            vec![vec![3.0, 4.0]],
            1.0,
            1.0,
        );
        // beta = 25 t / 25 = t; boundary at m lambda mu = 0.5
        let mu = 0.5;
        let below = p.sr_prox(
            &[0.3 * (0.5 - 1e-13), 0.4 * (0.5 - 1e-13)],
            SampleIndex(0),
            mu,
        );
        let above = p.sr_prox(
            &[0.3 * (0.5 + 1e-13), 0.4 * (0.5 + 1e-13)],
            SampleIndex(0),
            mu,
        );
        for (a, b) in below.iter().zip(&above) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_of_degenerate_instances() {
        let p = row_problem(
            vec![vec![0.0, 0.0]],
            vec![1.0],
            vec![vec![1.0, 0.0]],
            1.0,
            0.7,
        );
        let c = p.sr_constants();
        assert_eq!(c.lipschitz, 0.7);
        assert_eq!(c.strong_convexity, 0.7);
        let p = row_problem(
            vec![vec![3.0, 0.0]],
            vec![1.0],
            vec![vec![1.0, 0.0]],
            1.0,
            1.0,
        );
        assert_eq!(p.sr_constants().lipschitz, 10.0);
    }

    #[test]
    fn h_value_is_weighted_abs() {
        let p = generate_sr_instance(4, 6, 0.5, 0.3, 2).unwrap();
        let x = [0.1, -0.2, 0.3, 0.4];
        let avg: f64 = (0..6).map(|i| p.h_value(&x, SampleIndex(i))).sum::<f64>() / 6.0;
        let l1: f64 = p.delta().mul_vec(&x).iter().map(|v| v.abs()).sum();
        assert!((avg - 0.3 * l1).abs() < 1e-12);
    }

    #[test]
    fn instance_file_roundtrip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.bin");
        let p = generate_sr_instance(5, 9, 0.25, 0.1, 42).unwrap();
        p.save(&path).unwrap();
        let q = SrProblem::load(&path).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.seed(), Some(42));

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(SrProblem::load(&path).is_err());
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(SrProblem::load(&path).is_err());
    }
}
