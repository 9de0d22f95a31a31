//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sspg_core::cfp::ConvexSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
}

pub fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + r.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn nrm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Minimizer of a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// `argmin |z - x|^2 / 2` subject to `a_i^T z <= b_i`, by projected gradient on the dual.
pub fn halfspace_qp(a: &[Vec<f64>], b: &[f64], x: &[f64], iters: usize) -> Vec<f64> {
    let q = a.len();
    let gram: Vec<Vec<f64>> = (0..q)
        .map(|i| (0..q).map(|j| dot(&a[i], &a[j])).collect())
        .collect();
    let l: f64 = gram
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut lam = vec![0.0; q];
    let primal = |lam: &[f64]| -> Vec<f64> {
        let mut z = x.to_vec();
        for i in 0..q {
            for (zj, aj) in z.iter_mut().zip(&a[i]) {
                *zj -= lam[i] * aj;
            }
        }
        z
    };
    for _ in 0..iters {
        let z = primal(&lam);
        for i in 0..q {
            lam[i] = (lam[i] + (dot(&a[i], &z) - b[i]) / l).max(0.0);
        }
    }
    primal(&lam)
}

/// Best objective value seen by a subgradient method with stepsize `c / sqrt(k)`.
pub fn subgradient_descent(
    f: impl Fn(&[f64]) -> f64,
    g: impl Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    c: f64,
    iters: usize,
) -> (Vec<f64>, f64) {
    let mut x = x0.to_vec();
    let mut best = (x.clone(), f(&x));
    for k in 1..=iters {
        let d = g(&x);
        let step = c / (k as f64).sqrt();
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi -= step * di;
        }
        let v = f(&x);
        if v < best.1 {
            best = (x.clone(), v);
        }
    }
    best
}

/// Hand-rolled uniform index stream: ChaCha8 words reduced by `(w * m) >> 64`.
pub struct IndexStream(ChaCha8Rng);

impl IndexStream {
    pub fn new(seed: u64) -> Self {
        IndexStream(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next(&mut self, m: usize) -> usize {
        let w: u64 = self.0.gen();
        ((w as u128 * m as u128) >> 64) as usize
    }
}

/// Minimizer of `c |a^T z| + |z - y|^2 / (2 mu)`, searched along `z = y - t a`.
pub fn line_search_prox(a: &[f64], c: f64, y: &[f64], mu: f64) -> Vec<f64> {
    let d = dot(a, a);
    let ay = dot(a, y);
    // phi(t) - c|a^T y|, written to avoid cancellation
    let phi = |t: f64| {
        let r = ay - t * d;
        c * (t * t * d * d - 2.0 * ay * t * d) / (r.abs() + ay.abs()).max(1e-300)
            + t * t * d / (2.0 * mu)
    };
    let span = ay.abs() / d + 1.0;
    let t0 = golden_section(phi, -span, span, 1e-14 * span);
    // polish on the sign of a subgradient of phi, which is monotone
    let slope = |t: f64| {
        let r = ay - t * d;
        let s = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            return 0.0;
        };
        -c * d * s + t * d / mu
    };
    let (mut lo, mut hi) = (t0 - 1e-6 * span, t0 + 1e-6 * span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    y.iter().zip(a).map(|(yi, ai)| yi - t * ai).collect()
}

pub fn random_set(r: &mut ChaCha8Rng, n: usize) -> ConvexSet {
    match r.gen_range(0..3) {
        0 => ConvexSet::Halfspace {
            a: normal_vec(r, n),
            b: r.gen::<f64>() - 0.5,
        },
        1 => ConvexSet::Hyperplane {
            a: normal_vec(r, n),
            b: r.gen::<f64>() - 0.5,
        },
        _ => ConvexSet::Ball {
            center: normal_vec(r, n),
            radius: log_uniform(r, 0.1, 3.0),
        },
    }
}

/// A feasible point built without the projection under test.
pub fn feasible_sample(r: &mut ChaCha8Rng, s: &ConvexSet) -> Vec<f64> {
    let n = s.dim();
    match s {
        ConvexSet::Halfspace { a, b } => {
            let w = normal_vec(r, n);
            let ex = dot(a, &w) - b;
            if ex <= 0.0 {
                w
            } else {
                let k = 2.0 * ex / dot(a, a);
                w.iter().zip(a).map(|(wi, ai)| wi - k * ai).collect()
            }
        }
        ConvexSet::Hyperplane { a, b } => {
            // b a / |a|^2 plus a combination of vectors orthogonal to a
            let mut w: Vec<f64> = a.iter().map(|ai| b * ai / dot(a, a)).collect();
            let v = normal_vec(r, n);
            let mut u = v.clone();
            let k = dot(&v, a) / dot(a, a);
            for (ui, ai) in u.iter_mut().zip(a) {
                *ui -= k * ai;
            }
            for (wi, ui) in w.iter_mut().zip(&u) {
                *wi += ui;
            }
            w
        }
        ConvexSet::Ball { center, radius } => {
            let d = normal_vec(r, n);
            let rad = radius * r.gen::<f64>().powf(1.0 / n as f64) * 0.999;
            center
                .iter()
                .zip(&d)
                .map(|(c, di)| c + rad * di / nrm(&d))
                .collect()
        }
    }
}
