//! Seed-replicated estimates of `E |x^k - x*|^2` and the one-step recurrence check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::TheoryConstants;
use crate::engine::{is_recorded, sspg_step, SolverState};
use crate::error::{ensure, Result, SspgError};
use crate::linalg::dist_sq;
use crate::oracle::{ProxOracle, SmoothOracle};
use crate::schedule::StepsizeSchedule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTraceRecord {
    pub k: u64,
    pub mean_sq_dist: f64,
    pub stderr: f64,
}

/// Sample mean and standard error of a per-iteration quantity over `runs` replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanTrace {
    pub runs: usize,
    pub records: Vec<MeanTraceRecord>,
}

impl MeanTrace {
    pub fn from_records(runs: usize, records: Vec<MeanTraceRecord>) -> Result<Self> {
        ensure(runs >= 2, || {
            format!("a mean trace needs at least 2 runs, got {runs}")
        })?;
        ensure(records.iter().all(|r| r.stderr >= 0.0), || {
            "standard errors must be nonnegative".into()
        })?;
        ensure(records.windows(2).all(|w| w[0].k < w[1].k), || {
            "records must be strictly ordered by k".into()
        })?;
        Ok(MeanTrace { runs, records })
    }

    pub fn get(&self, k: u64) -> Option<&MeanTraceRecord> {
        self.records
            .binary_search_by_key(&k, |r| r.k)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn initial(&self) -> Option<f64> {
        self.get(0).map(|r| r.mean_sq_dist)
    }
}

/// Replicas use seeds `base_seed .. base_seed + runs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub base_seed: u64,
    pub runs: usize,
}

impl SeedRange {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64)
            .map(|i| self.base_seed.wrapping_add(i))
            .collect()
    }
}

/// `E |x^k - x*|^2` over seeds `seeds.base_seed ..`, for `k = 0..=horizon`.
#[allow(clippy::too_many_arguments)]
pub fn run_monte_carlo<S, P>(
    smooth: &S,
    prox: &P,
    schedule: &StepsizeSchedule,
    seeds: SeedRange,
    horizon: u64,
    x0: &[f64],
    reference: &[f64],
) -> Result<MeanTrace>
where
    S: SmoothOracle + ?Sized,
    P: ProxOracle + ?Sized,
{
    ensure(reference.len() == x0.len(), || {
        "reference and x0 differ in length".into()
    })?;
    let metric = |x: &[f64]| dist_sq(x, reference);
    monte_carlo_metric(smooth, prox, schedule, &seeds.seeds(), horizon, x0, &metric)
}

/// Same as [`run_monte_carlo`] with an arbitrary per-iterate metric and explicit seeds.
pub fn monte_carlo_metric<S, P, M>(
    smooth: &S,
    prox: &P,
    schedule: &StepsizeSchedule,
    seeds: &[u64],
    horizon: u64,
    x0: &[f64],
    metric: &M,
) -> Result<MeanTrace>
where
    S: SmoothOracle + ?Sized,
    P: ProxOracle + ?Sized,
    M: Fn(&[f64]) -> f64 + Sync,
{
    schedule.validate()?;
    ensure(seeds.len() >= 2, || {
        format!(
            "Monte-Carlo estimation needs at least 2 seeds, got {}",
            seeds.len()
        )
    })?;
    let mut sorted = seeds.to_vec();
    sorted.sort_unstable();
    ensure(sorted.windows(2).all(|w| w[0] != w[1]), || {
        "Monte-Carlo seeds must be distinct".into()
    })?;
    ensure(x0.len() == smooth.dim(), || {
        "x0 has the wrong dimension".into()
    })?;
    ensure(smooth.num_samples() == prox.num_samples(), || {
        "smooth and prox oracles disagree on the sample count".into()
    })?;

    let ks: Vec<u64> = (0..=horizon)
        .filter(|&k| is_recorded(k) || k == horizon)
        .collect();

    // replicas are independent; collect() keeps seed order so the reduction is deterministic
    let per_run: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&seed| -> Result<Vec<f64>> {
            let mut state = SolverState::new(x0.to_vec(), seed);
            let mut out = Vec::with_capacity(ks.len());
            out.push(metric(state.x()));
            for k in 1..=horizon {
                sspg_step(smooth, prox, &mut state, schedule.at(k))?;
                if is_recorded(k) || k == horizon {
                    out.push(metric(state.x()));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let r = seeds.len() as f64;
    let records = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let mean = per_run.iter().map(|v| v[j]).sum::<f64>() / r;
            let var = per_run.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (r - 1.0);
            MeanTraceRecord {
                k,
                mean_sq_dist: mean,
                stderr: (var / r).sqrt(),
            }
        })
        .collect();
    MeanTrace::from_records(seeds.len(), records)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceViolation {
    pub k: u64,
    /// `E |x^{k+1} - x*|^2`
    pub lhs: f64,
    /// `(1 - sigma_f mu) E |x^k - x*|^2 + mu^2 Sigma`
    pub rhs: f64,
    pub allowance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub checked: usize,
    pub sigma_multiplier: f64,
    pub violations: Vec<RecurrenceViolation>,
}

impl RecurrenceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `m_{k+1} <= (1 - sigma_f mu_{k+1}) m_k + mu_{k+1}^2 Sigma` on every pair of
/// consecutive records, allowing `sigma_multiplier` combined standard errors.
pub fn check_recurrence(
    mean: &MeanTrace,
    constants: &TheoryConstants,
    schedule: &StepsizeSchedule,
    sigma_multiplier: f64,
) -> Result<RecurrenceReport> {
    ensure(sigma_multiplier >= 0.0, || {
        "slack multiplier must be nonnegative".into()
    })?;
    if constants.strong_convexity <= 0.0 {
        return Err(SspgError::InvalidArgument(
            "sigma_f must be positive".into(),
        ));
    }
    let mut checked = 0;
    let mut violations = Vec::new();
    for w in mean.records.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.k != a.k + 1 {
            continue;
        }
        let mu = schedule.at(b.k);
        let contraction = 1.0 - constants.strong_convexity * mu;
        let rhs = contraction * a.mean_sq_dist + mu * mu * constants.sigma_noise;
        let combined = (b.stderr.powi(2) + (contraction * a.stderr).powi(2)).sqrt();
        let allowance = sigma_multiplier * combined;
        checked += 1;
        if b.mean_sq_dist > rhs + allowance {
            violations.push(RecurrenceViolation {
                k: a.k,
                lhs: b.mean_sq_dist,
                rhs,
                allowance,
            });
        }
    }
    Ok(RecurrenceReport {
        checked,
        sigma_multiplier,
        violations,
    })
}
