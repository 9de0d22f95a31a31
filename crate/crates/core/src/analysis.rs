//! Rate fitting and theory-bound curves.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result, SspgError};
use crate::montecarlo::MeanTrace;

/// Allowed deviation of a fitted exponent from its theoretical value.
pub const EXPONENT_TOL: f64 = 0.2;
/// Minimum coefficient of determination for a rate fit to pass.
pub const MIN_R_SQUARED: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub slope: f64,
    pub intercept: f64,
    pub window: (u64, u64),
    pub points: usize,
    pub r_squared: f64,
    pub theory_exponent: f64,
    pub verdict: Verdict,
}

/// Ordinary least squares `y = a + b x`. Returns `(b, a, r^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    ensure(xs.len() == ys.len(), || {
        "fit needs equally many x and y values".into()
    })?;
    ensure(xs.len() >= 2, || "fit needs at least two points".into())?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    ensure(sxx > 0.0, || {
        "fit needs at least two distinct x values".into()
    })?;
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok((slope, intercept, r2))
}

/// Slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    ensure(xs.iter().chain(ys).all(|v| *v > 0.0), || {
        "log-log fit needs positive values".into()
    })?;
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (s, _, r2) = linear_fit(&lx, &ly)?;
    Ok((s, r2))
}

/// Fits `log E|x^k - x*|^2 = a + b log k` over `window` and compares `b` with `-gamma`.
pub fn fit_rate_exponent(mean: &MeanTrace, window: (u64, u64), gamma: f64) -> Result<RateReport> {
    let (kmin, kmax) = window;
    ensure(kmin >= 1 && kmin < kmax, || {
        format!("invalid fit window [{kmin}, {kmax}]")
    })?;
    let last = mean.records.last().map(|r| r.k).unwrap_or(0);
    ensure(kmax <= last, || {
        format!("window end {kmax} lies beyond the trace (last k = {last})")
    })?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in mean.records.iter().filter(|r| r.k >= kmin && r.k <= kmax) {
        if r.mean_sq_dist.is_nan() || r.mean_sq_dist <= 0.0 {
            return Err(SspgError::InvalidArgument(format!(
                "mean squared distance {} at k = {} is not positive; shrink the window",
                r.mean_sq_dist, r.k
            )));
        }
        xs.push((r.k as f64).ln());
        ys.push(r.mean_sq_dist.ln());
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys)?;
    let ok = (slope + gamma).abs() <= EXPONENT_TOL && r_squared >= MIN_R_SQUARED;
    Ok(RateReport {
        slope,
        intercept,
        window,
        points: xs.len(),
        r_squared,
        theory_exponent: -gamma,
        verdict: Verdict::from_bool(ok),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub level: f64,
    /// Mean standard error over the same tail.
    pub stderr: f64,
    pub points: usize,
}

/// Averages over records with `k >= (1 - tail_fraction) k_last`.
pub fn plateau_stats(mean: &MeanTrace, tail_fraction: f64) -> Result<Plateau> {
    ensure(tail_fraction > 0.0 && tail_fraction <= 0.5, || {
        format!("tail_fraction must lie in (0, 0.5], got {tail_fraction}")
    })?;
    let last = mean
        .records
        .last()
        .ok_or_else(|| SspgError::InvalidArgument("empty mean trace".into()))?
        .k;
    let start = ((1.0 - tail_fraction) * last as f64).ceil() as u64;
    let tail: Vec<_> = mean.records.iter().filter(|r| r.k >= start).collect();
    let n = tail.len() as f64;
    Ok(Plateau {
        level: tail.iter().map(|r| r.mean_sq_dist).sum::<f64>() / n,
        stderr: tail.iter().map(|r| r.stderr).sum::<f64>() / n,
        points: tail.len(),
    })
}

pub fn plateau_level(mean: &MeanTrace, tail_fraction: f64) -> Result<f64> {
    Ok(plateau_stats(mean, tail_fraction)?.level)
}

/// `(1 - mu sigma)^k d0^2 + (mu / sigma) Sigma`
pub fn constant_step_bound(k: u64, mu: f64, sigma_f: f64, d0_sq: f64, sigma_noise: f64) -> f64 {
    (1.0 - mu * sigma_f).max(0.0).powf(k as f64) * d0_sq + mu / sigma_f * sigma_noise
}

/// Limit of [`constant_step_bound`] as `k -> inf`.
pub fn constant_step_floor(mu: f64, sigma_f: f64, sigma_noise: f64) -> f64 {
    mu / sigma_f * sigma_noise
}

/// `(1 - kappa/8)^k d0^2`
pub fn cfp_linear_bound(k: u64, kappa: f64, d0_sq: f64) -> f64 {
    (1.0 - kappa / 8.0).powf(k as f64) * d0_sq
}

/// `phi_a(t) = (t^a - 1) / a`, with `phi_0 = ln`.
pub fn phi(a: f64, t: f64) -> f64 {
    if a.abs() < 1e-12 {
        t.ln()
    } else {
        (t.powf(a) - 1.0) / a
    }
}

/// Upper bound on `E|x^{k+1} - x*|^2` under `mu_k = mu0 / k^gamma`, split at `j = k / 2`.
pub fn polynomial_step_bound(
    k: u64,
    mu0: f64,
    gamma: f64,
    sigma_f: f64,
    d0_sq: f64,
    sigma_noise: f64,
) -> f64 {
    let kf = k.max(2) as f64;
    let j = (kf / 2.0).floor().max(1.0);
    let theta = 1.0 / (1.0 + mu0 * sigma_f);
    let g = 1.0 - gamma;
    let mu_next = mu0 / (j + 1.0).powf(gamma);
    theta.powf(phi(g, kf)) * d0_sq
        + theta.powf(phi(g, kf) - phi(g, j)) * phi(1.0 - 2.0 * gamma, j) * sigma_noise
        + mu_next / sigma_f * sigma_noise
}

/// `R^2` of a straight-line fit of `ln y` against `k`; values must be positive.
pub fn geometric_fit(ks: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    ensure(ys.iter().all(|v| *v > 0.0), || {
        "geometric fit needs positive values".into()
    })?;
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (rate, _, r2) = linear_fit(ks, &ly)?;
    Ok((rate, r2))
}
