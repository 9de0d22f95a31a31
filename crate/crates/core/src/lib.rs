//! Stochastic splitting proximal gradient (SSPG) for finite-sum composite problems
//! `min_x (1/m) sum_xi [f(x; xi) + h(x; xi)]`.
//!
//! Each iteration samples `xi`, takes a gradient step on `f(.; xi)` and then a
//! proximal step on `h(.; xi)`. The crate ships the solver, a sparse-representation
//! and a convex-feasibility problem family, a deterministic proximal-gradient
//! baseline, Monte-Carlo estimation of expected errors, and experiment plumbing.

pub mod analysis;
pub mod baseline;
pub mod cfp;
pub mod constants;
pub mod csvio;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod montecarlo;
pub mod oracle;
pub mod plot;
pub mod rng;
pub mod schedule;
pub mod sr;

pub use analysis::{fit_rate_exponent, plateau_level, RateReport, Verdict};
pub use baseline::{pg_step, prox_l1_composite, reference_solution, run_pg, PgConfig};
pub use cfp::{project_set, CfpProblem, ConvexSet};
pub use constants::TheoryConstants;
pub use csvio::{emit_mean_trace_csv, emit_trace_csv};
pub use engine::{run_sspg, sspg_step, RunOptions, SolverState, StoppingRule, Trace, TraceRecord};
pub use error::{Result, SspgError};
pub use experiment::{run_experiment, ExperimentConfig, Manifest};
pub use linalg::Matrix;
pub use montecarlo::{
    check_recurrence, run_monte_carlo, MeanTrace, MeanTraceRecord, RecurrenceReport, SeedRange,
};
pub use oracle::{
    eval_full_objective, moreau_envelope, prox_optimality_residual, ProxOracle, SampleIndex,
    SmoothOracle,
};
pub use schedule::{stepsize, ScheduleKind, StepsizeSchedule};
pub use sr::{generate_sr_instance, SrProblem};
