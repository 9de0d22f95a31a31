//! The stochastic splitting proximal gradient iteration
//!
//! ```text
//! y^k     = x^k - mu_k grad f(x^k; xi_k)
//! x^{k+1} = prox_{h, mu_k}(y^k; xi_k)
//! ```
//!
//! with one uniformly drawn index `xi_k` per step. SGD (`h = 0`), proximal SGD
//! (sample-independent `h`), stochastic proximal point (`f = 0`) and randomized
//! alternating projections (`f = 0`, indicator `h`) are all obtained by plugging
//! the corresponding oracles into the same loop.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result, SspgError};
use crate::linalg::{all_finite, axpy, dist, dist_sq};
use crate::oracle::{eval_full_objective, ProxOracle, SampleIndex, SmoothOracle};
use crate::rng::SampleRng;
use crate::schedule::StepsizeSchedule;

/// Records are kept for every iteration up to this index, then only at powers of two.
pub const DENSE_RECORD_LIMIT: u64 = 100_000;

#[inline]
pub fn is_recorded(k: u64) -> bool {
    k <= DENSE_RECORD_LIMIT || k.is_power_of_two()
}

/// Iterate, counter and generator of one run.
#[derive(Clone, Debug)]
pub struct SolverState {
    x: Vec<f64>,
    k: u64,
    rng: SampleRng,
    y: Vec<f64>,
    scratch: Vec<f64>,
}

impl SolverState {
    pub fn new(x0: Vec<f64>, seed: u64) -> Self {
        let n = x0.len();
        SolverState {
            x: x0,
            k: 0,
            rng: SampleRng::new(seed),
            y: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `y^k` of the most recent step (the point handed to the prox).
    pub fn last_gradient_point(&self) -> &[f64] {
        &self.y
    }

    pub fn into_x(self) -> Vec<f64> {
        self.x
    }
}

/// One SSPG step with stepsize `mu`. Returns the drawn index.
pub fn sspg_step<S, P>(
    smooth: &S,
    prox: &P,
    state: &mut SolverState,
    mu: f64,
) -> Result<SampleIndex>
where
    S: SmoothOracle + ?Sized,
    P: ProxOracle + ?Sized,
{
    ensure(mu > 0.0 && mu.is_finite(), || {
        format!("stepsize must be positive, got {mu}")
    })?;
    let xi = state.rng.sample_index(smooth.num_samples());
    smooth.grad_into(&state.x, xi, &mut state.scratch);
    state.y.copy_from_slice(&state.x);
    axpy(-mu, &state.scratch, &mut state.y);
    prox.prox_into(&state.y, xi, mu, &mut state.x);
    state.k += 1;
    if !all_finite(&state.x) {
        return Err(SspgError::Diverged { k: state.k });
    }
    Ok(xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    /// Run exactly `cap` iterations.
    MaxIter { cap: u64 },
    /// Stop once `|x^k - x*| <= eps` against the supplied reference.
    DistToReference { eps: f64, cap: u64 },
    /// Stop once the full prox-gradient mapping norm drops to `eps`;
    /// checked once per pass over the samples.
    GradientMapNorm { eps: f64, cap: u64 },
}

impl StoppingRule {
    pub fn cap(&self) -> u64 {
        match *self {
            StoppingRule::MaxIter { cap }
            | StoppingRule::DistToReference { cap, .. }
            | StoppingRule::GradientMapNorm { cap, .. } => cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.cap() >= 1, || "stopping cap must be at least 1".into())?;
        match *self {
            StoppingRule::DistToReference { eps, .. }
            | StoppingRule::GradientMapNorm { eps, .. } => ensure(eps > 0.0, || {
                format!("stopping threshold must be positive, got {eps}")
            }),
            StoppingRule::MaxIter { .. } => Ok(()),
        }
    }
}

/// What a run records besides the iterates.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub x0: Option<Vec<f64>>,
    pub reference: Option<Vec<f64>>,
    pub record_objective: bool,
    pub record_feasibility: bool,
    pub record_wall_time: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            x0: None,
            reference: None,
            record_objective: true,
            record_feasibility: true,
            record_wall_time: true,
        }
    }
}

impl RunOptions {
    pub fn with_x0(mut self, x0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn with_reference(mut self, reference: Vec<f64>) -> Self {
        self.reference = Some(reference);
        self
    }

    /// Drop every per-iteration evaluation that is not needed for stopping.
    pub fn lean(mut self) -> Self {
        self.record_objective = false;
        self.record_feasibility = false;
        self
    }

    pub fn deterministic(mut self) -> Self {
        self.record_wall_time = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: u64,
    pub sq_dist_to_opt: Option<f64>,
    pub objective: Option<f64>,
    pub dist_to_feasible: Option<f64>,
    pub wall_time_s: Option<f64>,
}

/// Per-iteration history of a single run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub schedule: String,
    pub records: Vec<TraceRecord>,
    pub iterations: u64,
    pub converged: bool,
    pub final_x: Vec<f64>,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Wall time of the final record, if timing was recorded.
    pub fn total_time_s(&self) -> Option<f64> {
        self.last().and_then(|r| r.wall_time_s)
    }

    /// Traces compared without their wall-clock column.
    pub fn same_path(&self, other: &Trace) -> bool {
        let strip = |t: &Trace| -> Vec<TraceRecord> {
            t.records
                .iter()
                .map(|r| TraceRecord {
                    wall_time_s: None,
                    ..*r
                })
                .collect()
        };
        self.seed == other.seed
            && self.iterations == other.iterations
            && self.converged == other.converged
            && self.final_x == other.final_x
            && strip(self) == strip(other)
    }
}

pub(crate) struct Recorder<'a> {
    pub opts: &'a RunOptions,
    pub start: Instant,
    pub records: Vec<TraceRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(opts: &'a RunOptions) -> Self {
        Recorder {
            opts,
            start: Instant::now(),
            records: Vec::new(),
        }
    }

    pub fn record<F>(&mut self, k: u64, x: &[f64], objective: F, feasibility: Option<f64>)
    where
        F: FnOnce(&[f64]) -> f64,
    {
        let wall = self
            .opts
            .record_wall_time
            .then(|| self.start.elapsed().as_secs_f64());
        let sq = self.opts.reference.as_deref().map(|r| dist_sq(x, r));
        let objective = self.opts.record_objective.then(|| objective(x));
        self.records.push(TraceRecord {
            k,
            sq_dist_to_opt: sq,
            objective,
            dist_to_feasible: feasibility,
            wall_time_s: wall,
        });
    }
}

/// Prox-gradient mapping norm `|x - prox_{h,mu}(x - mu grad f(x))| / mu` of the averaged problem.
pub fn gradient_mapping_norm<S, P>(smooth: &S, prox: &P, x: &[f64], mu: f64) -> Option<f64>
where
    S: SmoothOracle + ?Sized,
    P: ProxOracle + ?Sized,
{
    let mut y = x.to_vec();
    axpy(-mu, &smooth.full_grad(x), &mut y);
    let z = prox.full_prox(&y, mu)?;
    Some(dist(x, &z) / mu)
}

/// Runs SSPG from `opts.x0` (zero by default) until `stop` fires or its cap is reached.
///
/// Deterministic in `(problem, schedule, seed, stop, x0)`. A run that hits the cap
/// without meeting a threshold rule returns a trace with `converged = false`.
pub fn run_sspg<S, P>(
    smooth: &S,
    prox: &P,
    schedule: &StepsizeSchedule,
    seed: u64,
    stop: &StoppingRule,
    opts: &RunOptions,
) -> Result<Trace>
where
    S: SmoothOracle + ?Sized,
    P: ProxOracle + ?Sized,
{
    schedule.validate()?;
    stop.validate()?;
    ensure(smooth.num_samples() == prox.num_samples(), || {
        "smooth and prox oracles disagree on the sample count".into()
    })?;
    let n = smooth.dim();
    let x0 = opts.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    if x0.len() != n {
        return Err(SspgError::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    let reference = opts.reference.as_deref();
    if let Some(r) = reference {
        if r.len() != n {
            return Err(SspgError::DimensionMismatch {
                expected: n,
                actual: r.len(),
            });
        }
    }
    if let StoppingRule::DistToReference { .. } = stop {
        ensure(reference.is_some(), || {
            "DistToReference stopping needs a reference point".into()
        })?;
    }
    if let StoppingRule::GradientMapNorm { .. } = stop {
        ensure(prox.full_prox(&x0, 1.0).is_some(), || {
            "GradientMapNorm stopping needs an oracle with a full prox".into()
        })?;
    }

    let m = smooth.num_samples() as u64;
    let objective = |x: &[f64]| eval_full_objective(smooth, prox, x).unwrap_or(f64::NAN);
    let feasibility = |x: &[f64]| {
        if opts.record_feasibility {
            prox.dist_to_feasible(x)
        } else {
            None
        }
    };

    let mut rec = Recorder::new(opts);
    let mut state = SolverState::new(x0, seed);
    rec.record(0, state.x(), objective, feasibility(state.x()));

    let cap = stop.cap();
    let mut converged = matches!(stop, StoppingRule::MaxIter { .. });
    let mut done = match (stop, reference) {
        (StoppingRule::DistToReference { eps, .. }, Some(r)) => dist(state.x(), r) <= *eps,
        _ => false,
    };
    if done {
        converged = true;
    }
    while !done && state.k() < cap {
        let k = state.k() + 1;
        let mu = schedule.at(k);
        sspg_step(smooth, prox, &mut state, mu)?;
        let hit = match *stop {
            StoppingRule::MaxIter { .. } => false,
            StoppingRule::DistToReference { eps, .. } => {
                dist(state.x(), reference.expect("checked above")) <= eps
            }
            StoppingRule::GradientMapNorm { eps, .. } => {
                if k.is_multiple_of(m) {
                    let mu_bar = if schedule.clamp.is_finite() {
                        schedule.clamp
                    } else {
                        mu
                    };
                    gradient_mapping_norm(smooth, prox, state.x(), mu_bar).is_some_and(|g| g <= eps)
                } else {
                    false
                }
            }
        };
        if hit {
            converged = true;
            done = true;
        }
        if is_recorded(k) || done || k == cap {
            rec.record(k, state.x(), objective, feasibility(state.x()));
        }
    }

    Ok(Trace {
        seed,
        schedule: schedule.descriptor(),
        records: rec.records,
        iterations: state.k(),
        converged,
        final_x: state.into_x(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ZeroProx, ZeroSmooth};

    #[test]
    fn recording_thins_after_dense_limit() {
        assert!(is_recorded(DENSE_RECORD_LIMIT));
        assert!(!is_recorded(DENSE_RECORD_LIMIT + 1));
        assert!(is_recorded(131_072));
    }

    #[test]
    fn zero_problem_stays_put() {
        let s = ZeroSmooth { dim: 3, samples: 4 };
        let p = ZeroProx { samples: 4 };
        let sched = StepsizeSchedule::constant(0.1);
        let t = run_sspg(
            &s,
            &p,
            &sched,
            1,
            &StoppingRule::MaxIter { cap: 10 },
            &RunOptions::default().with_x0(vec![1.0, 2.0, 3.0]),
        )
        .unwrap();
        assert_eq!(t.records.len(), 11);
        assert_eq!(t.final_x, vec![1.0, 2.0, 3.0]);
        assert!(t.converged);
    }

    #[test]
    fn dist_stop_requires_reference() {
        let s = ZeroSmooth { dim: 1, samples: 1 };
        let p = ZeroProx { samples: 1 };
        let r = run_sspg(
            &s,
            &p,
            &StepsizeSchedule::constant(0.1),
            1,
            &StoppingRule::DistToReference { eps: 1e-3, cap: 5 },
            &RunOptions::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn nonpositive_step_rejected() {
        let s = ZeroSmooth { dim: 1, samples: 1 };
        let p = ZeroProx { samples: 1 };
        let mut st = SolverState::new(vec![0.0], 0);
        assert!(sspg_step(&s, &p, &mut st, 0.0).is_err());
    }
}
