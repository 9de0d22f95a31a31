//! Full-batch proximal gradient for the sparse-representation objective, and a
//! long-horizon reference solver built on it.
//!
//! The proximal step needs `argmin_z tau |Delta z|_1 + (1/2)|z - v|^2`, which has
//! no closed form for general `Delta`. It is computed through the dual box QP
//!
//! ```text
//! min_{|u|_inf <= tau} (1/2) |Delta^T u - v|^2,    z = v - Delta^T u
//! ```
//!
//! with accelerated projected gradient, adaptive restart and backtracking on the
//! step (started from a power-iteration estimate of `|Delta|^2`).

use serde::{Deserialize, Serialize};

use crate::engine::{is_recorded, Recorder, RunOptions, Trace};
use crate::error::{ensure, Result, SspgError};
use crate::linalg::{axpy, dist, norm, norm_sq, Matrix};
use crate::sr::SrProblem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgConfig {
    /// Lipschitz constant of the full smooth gradient, `|T|_2^2 / m + alpha`.
    pub lipschitz: f64,
    pub inner_tol: f64,
    pub inner_cap: usize,
    pub outer_tol: f64,
    pub outer_cap: u64,
}

impl PgConfig {
    pub fn for_problem(problem: &SrProblem) -> Self {
        PgConfig {
            lipschitz: problem.t().spectral_norm_sq() / problem.m() as f64 + problem.alpha(),
            inner_tol: 1e-10,
            inner_cap: 20_000,
            outer_tol: 1e-6,
            outer_cap: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lipschitz > 0.0 && self.lipschitz.is_finite(), || {
            format!("L must be positive, got {}", self.lipschitz)
        })?;
        ensure(self.inner_tol > 0.0 && self.outer_tol > 0.0, || {
            "tolerances must be positive".into()
        })?;
        ensure(self.inner_cap >= 1 && self.outer_cap >= 1, || {
            "caps must be >= 1".into()
        })
    }
}

/// Output of the composite prox solver.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeProx {
    pub z: Vec<f64>,
    /// Dual certificate; `z = v - Delta^T u` holds exactly.
    pub u: Vec<f64>,
    /// Primal change over the last projected-gradient step.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `argmin_z tau |Delta z|_1 + (1/2)|z - v|^2`.
///
/// Returns the best iterate with `converged = false` when `cap` is exhausted.
pub fn prox_l1_composite(
    delta: &Matrix,
    tau: f64,
    v: &[f64],
    tol: f64,
    cap: usize,
) -> Result<CompositeProx> {
    prox_l1_composite_warm(delta, tau, v, tol, cap, None, None)
}

/// [`prox_l1_composite`] with an optional dual warm start and step estimate.
pub fn prox_l1_composite_warm(
    delta: &Matrix,
    tau: f64,
    v: &[f64],
    tol: f64,
    cap: usize,
    u0: Option<&[f64]>,
    lipschitz_hint: Option<f64>,
) -> Result<CompositeProx> {
    ensure(tau >= 0.0 && tau.is_finite(), || {
        format!("tau must be >= 0, got {tau}")
    })?;
    ensure(tol > 0.0, || "tol must be positive".into())?;
    ensure(v.len() == delta.cols(), || {
        "v has the wrong dimension".into()
    })?;
    let p = delta.rows();
    if tau == 0.0 || p == 0 {
        return Ok(CompositeProx {
            z: v.to_vec(),
            u: vec![0.0; p],
            residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let project = |u: &mut [f64]| u.iter_mut().for_each(|ui| *ui = ui.clamp(-tau, tau));
    let primal = |u: &[f64], out: &mut Vec<f64>| {
        delta.tr_mul_vec_into(u, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - *o;
        }
    };

    let mut lip = lipschitz_hint
        .unwrap_or_else(|| delta.power_norm_sq(20))
        .max(1e-300);
    let mut u: Vec<f64> = match u0 {
        Some(u0) if u0.len() == p => u0.to_vec(),
        _ => vec![0.0; p],
    };
    project(&mut u);
    let mut z = vec![0.0; v.len()];
    primal(&u, &mut z);
    let mut d_u = 0.5 * norm_sq(&z);

    let mut w = u.clone();
    let mut zw = z.clone();
    let mut u_next = vec![0.0; p];
    let mut z_next = vec![0.0; v.len()];
    let mut grad = vec![0.0; p];
    let mut theta: f64 = 1.0;
    let mut residual = f64::INFINITY;

    for it in 1..=cap {
        // grad D(w) = -Delta z(w)
        delta.mul_vec_into(&zw, &mut grad);
        grad.iter_mut().for_each(|g| *g = -*g);
        let d_w = 0.5 * norm_sq(&zw);
        loop {
            for j in 0..p {
                u_next[j] = (w[j] - grad[j] / lip).clamp(-tau, tau);
            }
            primal(&u_next, &mut z_next);
            let d_next = 0.5 * norm_sq(&z_next);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for j in 0..p {
                let dj = u_next[j] - w[j];
                lin += grad[j] * dj;
                quad += dj * dj;
            }
            if d_next <= d_w + lin + 0.5 * lip * quad + 1e-15 * d_w.abs().max(1e-300) {
                break;
            }
            lip *= 2.0;
        }
        residual = dist(&z_next, &zw);
        let d_next = 0.5 * norm_sq(&z_next);

        if d_next > d_u {
            theta = 1.0;
            w.copy_from_slice(&u_next);
            zw.copy_from_slice(&z_next);
        } else {
            let theta_next = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
            let beta = (theta - 1.0) / theta_next;
            for j in 0..p {
                w[j] = u_next[j] + beta * (u_next[j] - u[j]);
            }
            primal(&w, &mut zw);
            theta = theta_next;
        }
        std::mem::swap(&mut u, &mut u_next);
        std::mem::swap(&mut z, &mut z_next);
        d_u = d_next;

        if residual <= tol {
            return Ok(CompositeProx {
                z,
                u,
                residual,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(CompositeProx {
        z,
        u,
        residual,
        iterations: cap,
        converged: false,
    })
}

/// One proximal gradient step from `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct PgStep {
    pub x: Vec<f64>,
    pub inner: CompositeProx,
}

/// `prox_{(lambda/L) |Delta .|_1}(x - g / L)` with `g = (1/m) T^T (T x - y) + alpha x`.
pub fn pg_step(problem: &SrProblem, x: &[f64], cfg: &PgConfig) -> Result<PgStep> {
    pg_step_warm(problem, x, cfg, None)
}

fn pg_step_warm(
    problem: &SrProblem,
    x: &[f64],
    cfg: &PgConfig,
    u0: Option<&[f64]>,
) -> Result<PgStep> {
    cfg.validate()?;
    ensure(x.len() == problem.n(), || {
        "x has the wrong dimension".into()
    })?;
    let g = problem.smooth_full_grad(x);
    let mut v = x.to_vec();
    axpy(-1.0 / cfg.lipschitz, &g, &mut v);
    let inner = prox_l1_composite_warm(
        problem.delta(),
        problem.lambda() / cfg.lipschitz,
        &v,
        cfg.inner_tol,
        cfg.inner_cap,
        u0,
        Some(problem.delta_norm_sq()),
    )?;
    Ok(PgStep {
        x: inner.z.clone(),
        inner,
    })
}

/// Proximal gradient from `opts.x0` (zero by default).
///
/// Stops when `|x^k - x*| <= outer_tol` if a reference is supplied, otherwise when
/// the gradient mapping `L |x^k - x^{k+1}|` drops to `outer_tol`.
pub fn run_pg(problem: &SrProblem, cfg: &PgConfig, opts: &RunOptions) -> Result<Trace> {
    cfg.validate()?;
    let n = problem.n();
    let mut x = opts.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    ensure(x.len() == n, || "x0 has the wrong dimension".into())?;
    let reference = opts.reference.as_deref();
    if let Some(r) = reference {
        ensure(r.len() == n, || "reference has the wrong dimension".into())?;
    }

    let objective = |x: &[f64]| problem.objective(x);
    let mut rec = Recorder::new(opts);
    rec.record(0, &x, objective, None);

    let mut converged = reference.is_some_and(|r| dist(&x, r) <= cfg.outer_tol);
    let mut u: Option<Vec<f64>> = None;
    let mut k = 0;
    while !converged && k < cfg.outer_cap {
        let step = pg_step_warm(problem, &x, cfg, u.as_deref())?;
        k += 1;
        let mapping = cfg.lipschitz * dist(&x, &step.x);
        x = step.x;
        u = Some(step.inner.u);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SspgError::Diverged { k });
        }
        converged = match reference {
            Some(r) => dist(&x, r) <= cfg.outer_tol,
            None => mapping <= cfg.outer_tol,
        };
        if is_recorded(k) || converged || k == cfg.outer_cap {
            rec.record(k, &x, objective, None);
        }
    }
    Ok(Trace {
        seed: 0,
        schedule: format!("pg(L={:e})", cfg.lipschitz),
        records: rec.records,
        iterations: k,
        converged,
        final_x: x,
    })
}

/// High-accuracy minimizer from proximal gradient started at zero.
///
/// Returns `(x*, L |x* - pg_step(x*)|)` with the residual at most `tol`.
pub fn reference_solution(problem: &SrProblem, tol: f64) -> Result<(Vec<f64>, f64)> {
    reference_solution_from(problem, tol, &vec![0.0; problem.n()])
}

pub fn reference_solution_from(
    problem: &SrProblem,
    tol: f64,
    x0: &[f64],
) -> Result<(Vec<f64>, f64)> {
    ensure(tol > 0.0, || "tol must be positive".into())?;
    ensure(x0.len() == problem.n(), || {
        "x0 has the wrong dimension".into()
    })?;
    let cfg = PgConfig {
        inner_tol: tol / 100.0,
        outer_tol: tol,
        outer_cap: 1_000_000,
        ..PgConfig::for_problem(problem)
    };
    let mut x = x0.to_vec();
    let mut u: Option<Vec<f64>> = None;
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.outer_cap {
        let step = pg_step_warm(problem, &x, &cfg, u.as_deref())?;
        residual = cfg.lipschitz * dist(&x, &step.x);
        if residual <= tol {
            return Ok((x, residual));
        }
        x = step.x;
        u = Some(step.inner.u);
    }
    Err(SspgError::NotConverged {
        what: "reference solution",
        iterations: cfg.outer_cap as usize,
        residual,
    })
}

/// Largest `|u_i| / tau` violation and smallest sign agreement, used by tests to
/// certify `u ∈ tau ∂|.|(Delta z)`.
pub fn dual_membership_violation(
    delta: &Matrix,
    tau: f64,
    z: &[f64],
    u: &[f64],
    kink_tol: f64,
) -> f64 {
    let dz = delta.mul_vec(z);
    let scale = norm(z).max(1.0);
    dz.iter()
        .zip(u)
        .enumerate()
        .map(|(i, (&d, &ui))| {
            let row = norm(delta.row(i));
            if d.abs() <= kink_tol * row * scale {
                (ui.abs() - tau).max(0.0)
            } else {
                (ui - tau * d.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Objective `tau |Delta z|_1 + (1/2)|z - v|^2` of the composite prox subproblem.
pub fn composite_prox_objective(delta: &Matrix, tau: f64, v: &[f64], z: &[f64]) -> f64 {
    let l1: f64 = delta.mul_vec(z).iter().map(|d| d.abs()).sum();
    let diff: f64 = z.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum();
    tau * l1 + 0.5 * diff
}
