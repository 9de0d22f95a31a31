//! Experiment configs, orchestration and the artifact manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    cfp_linear_bound, constant_step_bound, constant_step_floor, fit_rate_exponent, geometric_fit,
    loglog_slope, plateau_stats,
};
use crate::baseline::{reference_solution, run_pg, PgConfig};
use crate::cfp::{two_lines, CfpProblem};
use crate::csvio::{fmt_f64, mean_trace_to_csv, table_to_string, trace_to_csv};
use crate::engine::{run_sspg, RunOptions, StoppingRule, Trace};
use crate::error::{Result, SspgError};
use crate::montecarlo::{
    check_recurrence, monte_carlo_metric, run_monte_carlo, MeanTrace, SeedRange,
};
use crate::plot::{loglog_svg, Series};
use crate::rng::GENERATOR_NAME;
use crate::schedule::{ScheduleKind, StepsizeSchedule};
use crate::sr::{generate_sr_instance, SrProblem};

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const SEED_ENV: &str = "SSPG_SEED";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub experiment: Experiment,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// When off, wall-time cells are left empty and artifacts are byte-reproducible.
    #[serde(default = "yes")]
    pub record_wall_time: bool,
    #[serde(default)]
    pub plot: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    pub base: u64,
    pub runs: usize,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig { base: 1, runs: 1 }
    }
}

impl SeedConfig {
    pub fn range(&self) -> SeedRange {
        SeedRange {
            base_seed: self.base,
            runs: self.runs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    AtomsScaling(AtomsScaling),
    IterationsComparison(IterationsComparison),
    RateSweep(RateSweep),
    CfpLinear(CfpLinear),
    RecurrenceCheck(RecurrenceCheck),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::AtomsScaling(_) => "atoms_scaling",
            Experiment::IterationsComparison(_) => "iterations_comparison",
            Experiment::RateSweep(_) => "rate_sweep",
            Experiment::CfpLinear(_) => "cfp_linear",
            Experiment::RecurrenceCheck(_) => "recurrence_check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPoint {
    Zeros,
    #[default]
    Ones,
}

impl InitialPoint {
    pub fn build(self, n: usize) -> Vec<f64> {
        match self {
            InitialPoint::Zeros => vec![0.0; n],
            InitialPoint::Ones => vec![1.0; n],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKind,
    pub mu0: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    /// Defaults to `1 / (2 L_f)`.
    #[serde(default)]
    pub clamp: Option<f64>,
    /// Use `mu0 / n` instead of `mu0`.
    #[serde(default)]
    pub mu0_over_n: bool,
}

fn one() -> f64 {
    1.0
}

impl ScheduleConfig {
    pub fn build(&self, lipschitz: f64, n: usize) -> StepsizeSchedule {
        let mu0 = if self.mu0_over_n {
            self.mu0 / n as f64
        } else {
            self.mu0
        };
        let s = match self.kind {
            ScheduleKind::Constant => StepsizeSchedule::constant(mu0),
            ScheduleKind::Polynomial => StepsizeSchedule::polynomial(mu0, self.gamma),
        };
        match self.clamp {
            Some(c) => s.with_clamp(c),
            None => s.clamped_to_lipschitz(lipschitz),
        }
    }

    fn validate(&self) -> Result<()> {
        self.build(1.0, 1).validate()
    }
}

/// Time to reach `|x - x*| <= eps` for PG and SSPG over a range of sizes, `m = m_ratio n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomsScaling {
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
    pub m_ratio: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub eps: f64,
    pub reference_tol: f64,
    pub schedule: ScheduleConfig,
    pub x0: InitialPoint,
    pub sspg_cap: u64,
    pub pg_cap: u64,
    /// Smallest `n` used when comparing the growth of PG and SSPG times.
    pub trend_from_n: usize,
    /// Largest accepted log-log slope of SSPG time against `n`.
    pub max_time_exponent: f64,
}

impl Default for AtomsScaling {
    fn default() -> Self {
        AtomsScaling {
            n_min: 5,
            n_max: 125,
            n_step: 5,
            m_ratio: 4,
            alpha: 0.5,
            lambda: 5.0,
            eps: 1e-6,
            reference_tol: 1e-8,
            schedule: ScheduleConfig {
                kind: ScheduleKind::Polynomial,
                mu0: 0.01,
                gamma: 1.0,
                clamp: None,
                mu0_over_n: false,
            },
            x0: InitialPoint::Ones,
            sspg_cap: 200_000_000,
            pg_cap: 1_000_000,
            trend_from_n: 50,
            max_time_exponent: 1.2,
        }
    }
}

impl AtomsScaling {
    pub fn sizes(&self) -> Vec<usize> {
        if self.n_min > self.n_max {
            return Vec::new();
        }
        (self.n_min..=self.n_max).step_by(self.n_step).collect()
    }
}

/// A fixed budget of SSPG rounds against PG run to the target accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IterationsComparison {
    pub n_values: Vec<usize>,
    pub m_ratio: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub eps: f64,
    pub neighborhood: f64,
    pub reference_tol: f64,
    pub rounds: u64,
    /// Defaults to `m`, one pass over the samples per round.
    pub iters_per_round: Option<u64>,
    pub schedule: ScheduleConfig,
    pub x0: InitialPoint,
    pub pg_cap: u64,
}

impl Default for IterationsComparison {
    fn default() -> Self {
        IterationsComparison {
            n_values: vec![10, 25, 50],
            m_ratio: 6,
            alpha: 0.2,
            lambda: 5e-4,
            eps: 1e-6,
            neighborhood: 1e-3,
            reference_tol: 1e-8,
            rounds: 10,
            iters_per_round: None,
            schedule: ScheduleConfig {
                kind: ScheduleKind::Constant,
                mu0: 1.0,
                gamma: 1.0,
                clamp: None,
                mu0_over_n: false,
            },
            x0: InitialPoint::Ones,
            pg_cap: 1_000_000,
        }
    }
}

/// Fitted decay exponents of `E |x^k - x*|^2` under `mu_k = mu0 / k^gamma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateSweep {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub gammas: Vec<f64>,
    pub mu0: f64,
    pub clamp: Option<f64>,
    pub horizon: u64,
    pub window: (u64, u64),
    pub reference_tol: f64,
    pub x0: InitialPoint,
}

impl Default for RateSweep {
    fn default() -> Self {
        RateSweep {
            n: 5,
            m: 20,
            alpha: 5.0,
            lambda: 1e-3,
            gammas: vec![0.5, 0.75],
            mu0: 0.3,
            clamp: None,
            horizon: 10_000,
            window: (100, 10_000),
            reference_tol: 1e-10,
            x0: InitialPoint::Ones,
        }
    }
}

/// Randomized alternating projections against the `(1 - kappa/8)^k` envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CfpLinear {
    /// CFP instance file; two lines at angle `theta` when absent.
    pub instance: Option<PathBuf>,
    pub theta: f64,
    pub x0: Option<Vec<f64>>,
    pub horizon: u64,
    pub kappa_samples: usize,
    /// Defaults to ten times the initial distance.
    pub kappa_radius: Option<f64>,
    pub min_r_squared: f64,
}

impl Default for CfpLinear {
    fn default() -> Self {
        CfpLinear {
            instance: None,
            theta: std::f64::consts::FRAC_PI_3,
            x0: None,
            horizon: 500,
            kappa_samples: 2000,
            kappa_radius: None,
            min_r_squared: 0.95,
        }
    }
}

/// Constant-step one-step recurrence, plateau and bound-curve checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecurrenceCheck {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub lambda: f64,
    /// Defaults to `1 / (4 L_f)`.
    pub mu: Option<f64>,
    pub horizon: u64,
    pub sigma_multiplier: f64,
    pub sigma_tol: f64,
    pub reference_tol: f64,
    pub tail_fraction: f64,
    pub x0: InitialPoint,
}

impl Default for RecurrenceCheck {
    fn default() -> Self {
        RecurrenceCheck {
            n: 10,
            m: 40,
            alpha: 0.5,
            lambda: 5.0,
            mu: None,
            horizon: 5000,
            sigma_multiplier: 5.0,
            sigma_tol: 1e-6,
            reference_tol: 1e-10,
            tail_fraction: 0.25,
            x0: InitialPoint::Ones,
        }
    }
}

fn pos(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SspgError::Config(format!(
            "{what} must be positive and finite, got {v}"
        )))
    }
}

fn nonneg(v: f64, what: &str) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SspgError::Config(format!(
            "{what} must be nonnegative, got {v}"
        )))
    }
}

fn cfg_ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SspgError::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            format_version: CONFIG_FORMAT_VERSION,
            experiment,
            seeds: SeedConfig::default(),
            output_dir: None,
            record_wall_time: true,
            plot: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| SspgError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| SspgError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces the base seed with `SSPG_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seeds.base = v.trim().parse().map_err(|_| {
                SspgError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        cfg_ensure(self.format_version == CONFIG_FORMAT_VERSION, || {
            format!(
                "unsupported format_version {}, expected {CONFIG_FORMAT_VERSION}",
                self.format_version
            )
        })?;
        cfg_ensure(self.seeds.runs >= 1, || {
            "seeds.runs must be at least 1".into()
        })?;
        match &self.experiment {
            Experiment::AtomsScaling(c) => {
                cfg_ensure(c.n_step >= 1 && c.n_min >= 1, || {
                    "n_min and n_step must be at least 1".into()
                })?;
                cfg_ensure(c.m_ratio >= 1, || "m_ratio must be at least 1".into())?;
                pos(c.alpha, "alpha")?;
                nonneg(c.lambda, "lambda")?;
                pos(c.eps, "eps")?;
                pos(c.reference_tol, "reference_tol")?;
                pos(c.max_time_exponent, "max_time_exponent")?;
                cfg_ensure(c.sspg_cap >= 1 && c.pg_cap >= 1, || {
                    "caps must be at least 1".into()
                })?;
                c.schedule.validate().map_err(to_config)?;
            }
            Experiment::IterationsComparison(c) => {
                cfg_ensure(c.n_values.iter().all(|&n| n >= 1), || {
                    "n_values must be positive".into()
                })?;
                cfg_ensure(c.m_ratio >= 1 && c.rounds >= 1, || {
                    "m_ratio and rounds must be at least 1".into()
                })?;
                cfg_ensure(c.iters_per_round != Some(0), || {
                    "iters_per_round must be at least 1".into()
                })?;
                pos(c.alpha, "alpha")?;
                nonneg(c.lambda, "lambda")?;
                pos(c.eps, "eps")?;
                pos(c.neighborhood, "neighborhood")?;
                pos(c.reference_tol, "reference_tol")?;
                cfg_ensure(c.pg_cap >= 1, || "pg_cap must be at least 1".into())?;
                c.schedule.validate().map_err(to_config)?;
            }
            Experiment::RateSweep(c) => {
                cfg_ensure(c.n >= 1 && c.m >= 1, || "n and m must be at least 1".into())?;
                cfg_ensure(self.seeds.runs >= 2, || {
                    "a rate sweep needs seeds.runs >= 2".into()
                })?;
                pos(c.alpha, "alpha")?;
                nonneg(c.lambda, "lambda")?;
                pos(c.mu0, "mu0")?;
                pos(c.reference_tol, "reference_tol")?;
                if let Some(cl) = c.clamp {
                    pos(cl, "clamp")?;
                }
                cfg_ensure(
                    !c.gammas.is_empty() && c.gammas.iter().all(|g| *g > 0.0 && *g <= 1.0),
                    || "gammas must be nonempty and lie in (0, 1]".into(),
                )?;
                cfg_ensure(
                    c.window.0 >= 1 && c.window.0 < c.window.1 && c.window.1 <= c.horizon,
                    || "window must satisfy 1 <= k_min < k_max <= horizon".into(),
                )?;
            }
            Experiment::CfpLinear(c) => {
                cfg_ensure(self.seeds.runs >= 2, || {
                    "a CFP run needs seeds.runs >= 2".into()
                })?;
                cfg_ensure(c.horizon >= 1, || "horizon must be at least 1".into())?;
                cfg_ensure(c.kappa_samples >= 100, || {
                    "kappa_samples must be at least 100".into()
                })?;
                cfg_ensure((0.0..=1.0).contains(&c.min_r_squared), || {
                    "min_r_squared must lie in [0, 1]".into()
                })?;
                if let Some(r) = c.kappa_radius {
                    pos(r, "kappa_radius")?;
                }
                if c.instance.is_none() {
                    cfg_ensure(c.theta.sin().abs() > 1e-12, || {
                        "theta must not be a multiple of pi".into()
                    })?;
                }
            }
            Experiment::RecurrenceCheck(c) => {
                cfg_ensure(c.n >= 1 && c.m >= 1, || "n and m must be at least 1".into())?;
                cfg_ensure(self.seeds.runs >= 2, || {
                    "a recurrence check needs seeds.runs >= 2".into()
                })?;
                cfg_ensure(c.horizon >= 1, || "horizon must be at least 1".into())?;
                pos(c.alpha, "alpha")?;
                nonneg(c.lambda, "lambda")?;
                nonneg(c.sigma_multiplier, "sigma_multiplier")?;
                pos(c.sigma_tol, "sigma_tol")?;
                pos(c.reference_tol, "reference_tol")?;
                if let Some(mu) = c.mu {
                    pos(mu, "mu")?;
                }
                cfg_ensure(c.tail_fraction > 0.0 && c.tail_fraction <= 0.5, || {
                    "tail_fraction must lie in (0, 0.5]".into()
                })?;
            }
        }
        Ok(())
    }
}

fn to_config(e: SspgError) -> SspgError {
    SspgError::Config(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub generator: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
    pub unconverged: Vec<String>,
    pub verdicts: Vec<VerdictEntry>,
}

impl Manifest {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&VerdictEntry> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    fn verdict_push(&mut self, name: &str, passed: bool, detail: String) {
        self.verdicts.push(VerdictEntry {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Checks that every listed artifact exists under `dir` with a matching hash.
pub fn verify_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    for a in &manifest.artifacts {
        let p = dir.join(&a.path);
        let bytes = fs::read(&p).map_err(|e| SspgError::io(&p, e))?;
        if sha256_hex(&bytes) != a.sha256 {
            return Err(SspgError::format(&p, "sha256 mismatch"));
        }
    }
    Ok(())
}

struct Sink<'a> {
    dir: &'a Path,
    plot: bool,
    manifest: Manifest,
}

impl Sink<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| SspgError::io(&path, e))?;
        self.manifest.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(text.as_bytes()),
            bytes: text.len() as u64,
        });
        Ok(())
    }

    fn plot(&mut self, name: &str, title: &str, x: &str, y: &str, series: &[Series]) -> Result<()> {
        if self.plot {
            self.write(name, &loglog_svg(title, x, y, series))?;
        }
        Ok(())
    }
}

fn instance_seed(base: u64, n: usize) -> u64 {
    base.wrapping_add(n as u64)
}

fn sr_instance(n: usize, m: usize, alpha: f64, lambda: f64, base: u64) -> Result<SrProblem> {
    generate_sr_instance(n, m, alpha, lambda, instance_seed(base, n))
}

fn opt_time(t: Option<f64>) -> String {
    t.map(fmt_f64).unwrap_or_default()
}

fn mean_trace_series(name: &str, mean: &MeanTrace) -> Series {
    Series::new(
        name,
        mean.records
            .iter()
            .filter(|r| r.k > 0)
            .map(|r| (r.k as f64, r.mean_sq_dist))
            .collect(),
    )
}

fn trace_series(name: &str, t: &Trace) -> Series {
    Series::new(
        name,
        t.records
            .iter()
            .filter(|r| r.k > 0)
            .filter_map(|r| r.sq_dist_to_opt.map(|d| (r.k as f64, d.sqrt())))
            .collect(),
    )
}

/// Runs the configured experiment and writes its artifacts and `manifest.json` into `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| SspgError::io(out, e))?;
    let mut sink = Sink {
        dir: out,
        plot: cfg.plot,
        manifest: Manifest {
            format_version: CONFIG_FORMAT_VERSION,
            generator: GENERATOR_NAME.to_string(),
            experiment: cfg.experiment.name().to_string(),
            config: cfg.clone(),
            seeds: cfg.seeds.range().seeds(),
            artifacts: Vec::new(),
            unconverged: Vec::new(),
            verdicts: Vec::new(),
        },
    };
    match &cfg.experiment {
        Experiment::AtomsScaling(c) => atoms_scaling(cfg, c, &mut sink)?,
        Experiment::IterationsComparison(c) => iterations_comparison(cfg, c, &mut sink)?,
        Experiment::RateSweep(c) => rate_sweep(cfg, c, &mut sink)?,
        Experiment::CfpLinear(c) => cfp_linear(cfg, c, &mut sink)?,
        Experiment::RecurrenceCheck(c) => recurrence_check(cfg, c, &mut sink)?,
    }
    let manifest = sink.manifest;
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| SspgError::io(&path, e))?;
    Ok(manifest)
}

fn timed_opts(cfg: &ExperimentConfig, x0: Vec<f64>, reference: Vec<f64>) -> RunOptions {
    RunOptions {
        x0: Some(x0),
        reference: Some(reference),
        record_objective: false,
        record_feasibility: false,
        record_wall_time: cfg.record_wall_time,
    }
}

fn atoms_scaling(cfg: &ExperimentConfig, c: &AtomsScaling, sink: &mut Sink) -> Result<()> {
    let seeds = cfg.seeds.range().seeds();
    let mut rows = Vec::new();
    let mut points: Vec<(f64, Option<f64>, Option<f64>)> = Vec::new();
    let mut all_converged = true;
    for n in c.sizes() {
        let m = c.m_ratio * n;
        let p = sr_instance(n, m, c.alpha, c.lambda, cfg.seeds.base)?;
        let (x_star, _) = reference_solution(&p, c.reference_tol)?;
        let opts = timed_opts(cfg, c.x0.build(n), x_star);

        let pg_cfg = PgConfig {
            outer_tol: c.eps,
            outer_cap: c.pg_cap,
            ..PgConfig::for_problem(&p)
        };
        let pg = run_pg(&p, &pg_cfg, &opts)?;
        if !pg.converged {
            all_converged = false;
            sink.manifest
                .unconverged
                .push(format!("pg n={n} after {} iterations", pg.iterations));
        }

        let sched = c.schedule.build(p.sr_constants().lipschitz, n);
        let stop = StoppingRule::DistToReference {
            eps: c.eps,
            cap: c.sspg_cap,
        };
        let mut t_sum = Some(0.0);
        let mut it_sum = 0u64;
        for &seed in &seeds {
            let t = run_sspg(&p, &p, &sched, seed, &stop, &opts)?;
            if !t.converged {
                all_converged = false;
                sink.manifest.unconverged.push(format!(
                    "sspg n={n} seed={seed} after {} iterations",
                    t.iterations
                ));
            }
            t_sum = t_sum.zip(t.total_time_s()).map(|(a, b)| a + b);
            it_sum += t.iterations;
        }
        let r = seeds.len() as f64;
        let t_sspg = t_sum.map(|t| t / r);
        let t_pg = pg.total_time_s();
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            opt_time(t_pg),
            opt_time(t_sspg),
            pg.iterations.to_string(),
            fmt_f64(it_sum as f64 / r),
        ]);
        points.push((n as f64, t_pg, t_sspg));
    }
    sink.write(
        "atoms_scaling.csv",
        &table_to_string(
            &["n", "m", "t_pg_s", "t_sspg_s", "iters_pg", "iters_sspg"],
            &rows,
        )?,
    )?;
    if points.is_empty() {
        return Ok(());
    }
    sink.manifest.verdict_push(
        "atoms_scaling.converged",
        all_converged,
        format!("{} sizes", points.len()),
    );

    let timed: Vec<(f64, f64, f64)> = points
        .iter()
        .filter_map(|&(n, a, b)| Some((n, a?, b?)))
        .collect();
    if timed.len() < 2 || timed.len() != points.len() {
        return Ok(());
    }
    let ns: Vec<f64> = timed.iter().map(|p| p.0).collect();
    let t_pg: Vec<f64> = timed.iter().map(|p| p.1.max(1e-9)).collect();
    let t_sspg: Vec<f64> = timed.iter().map(|p| p.2.max(1e-9)).collect();
    let (slope_sspg, r2) = loglog_slope(&ns, &t_sspg)?;
    sink.manifest.verdict_push(
        "atoms_scaling.sspg_time_at_most_linear",
        slope_sspg <= c.max_time_exponent,
        format!(
            "log-log slope of SSPG time in n = {slope_sspg:.3} (R^2 {r2:.3}), limit {}",
            c.max_time_exponent
        ),
    );
    let big: Vec<usize> = (0..ns.len())
        .filter(|&i| ns[i] >= c.trend_from_n as f64)
        .collect();
    if big.len() >= 2 {
        let pick = |v: &[f64]| big.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let (s_pg, _) = loglog_slope(&pick(&ns), &pick(&t_pg))?;
        let (s_sspg, _) = loglog_slope(&pick(&ns), &pick(&t_sspg))?;
        sink.manifest.verdict_push(
            "atoms_scaling.pg_outgrows_sspg",
            s_pg > s_sspg,
            format!(
                "slopes for n >= {}: pg {s_pg:.3}, sspg {s_sspg:.3}",
                c.trend_from_n
            ),
        );
    }
    sink.plot(
        "atoms_scaling.svg",
        "time to reach x*",
        "n",
        "seconds",
        &[
            Series::new("PG", ns.iter().copied().zip(t_pg.iter().copied()).collect()),
            Series::new(
                "SSPG",
                ns.iter().copied().zip(t_sspg.iter().copied()).collect(),
            ),
        ],
    )
}

/// First recorded `(k, wall_time)` with `|x^k - x*| <= radius`.
pub fn first_within(trace: &Trace, radius: f64) -> Option<(u64, Option<f64>)> {
    trace
        .records
        .iter()
        .find(|r| r.sq_dist_to_opt.is_some_and(|d| d.sqrt() <= radius))
        .map(|r| (r.k, r.wall_time_s))
}

fn iterations_comparison(
    cfg: &ExperimentConfig,
    c: &IterationsComparison,
    sink: &mut Sink,
) -> Result<()> {
    let seeds = cfg.seeds.range().seeds();
    let mut rows = Vec::new();
    let mut last: Option<(usize, f64, Option<f64>, Option<f64>)> = None;
    for &n in &c.n_values {
        let m = c.m_ratio * n;
        let p = sr_instance(n, m, c.alpha, c.lambda, cfg.seeds.base)?;
        let (x_star, _) = reference_solution(&p, c.reference_tol)?;
        let opts = timed_opts(cfg, c.x0.build(n), x_star);

        let pg_cfg = PgConfig {
            outer_tol: c.eps,
            outer_cap: c.pg_cap,
            ..PgConfig::for_problem(&p)
        };
        let pg = run_pg(&p, &pg_cfg, &opts)?;
        if !pg.converged {
            sink.manifest
                .unconverged
                .push(format!("pg n={n} after {} iterations", pg.iterations));
        }
        sink.write(
            &format!("progress_n{n}_pg.csv"),
            &trace_to_csv(&pg.records)?,
        )?;
        let pg_hit = first_within(&pg, c.neighborhood);

        let sched = c.schedule.build(p.sr_constants().lipschitz, n);
        let budget = c.rounds * c.iters_per_round.unwrap_or(m as u64);
        let stop = StoppingRule::MaxIter { cap: budget };
        let mut worst = 0.0f64;
        let mut t_sum = Some(0.0);
        let mut first = None;
        for &seed in &seeds {
            let t = run_sspg(&p, &p, &sched, seed, &stop, &opts)?;
            sink.write(
                &format!("progress_n{n}_sspg_seed{seed}.csv"),
                &trace_to_csv(&t.records)?,
            )?;
            let d = t
                .last()
                .and_then(|r| r.sq_dist_to_opt)
                .unwrap_or(f64::INFINITY)
                .sqrt();
            worst = worst.max(d);
            t_sum = t_sum.zip(t.total_time_s()).map(|(a, b)| a + b);
            first.get_or_insert(t);
        }
        let t_sspg = t_sum.map(|t| t / seeds.len() as f64);
        let pg_match = first_within(&pg, worst);
        rows.push(vec![
            n.to_string(),
            m.to_string(),
            budget.to_string(),
            fmt_f64(worst),
            opt_time(t_sspg),
            pg_hit.map(|h| h.0.to_string()).unwrap_or_default(),
            opt_time(pg_hit.and_then(|h| h.1)),
            opt_time(pg_match.and_then(|h| h.1)),
            pg.iterations.to_string(),
            opt_time(pg.total_time_s()),
            pg.converged.to_string(),
        ]);
        if let Some(t) = &first {
            sink.plot(
                &format!("progress_n{n}.svg"),
                &format!("distance to x*, n = {n}"),
                "iteration",
                "|x - x*|",
                &[trace_series("PG", &pg), trace_series("SSPG", t)],
            )?;
        }
        last = Some((n, worst, t_sspg, pg_hit.and_then(|h| h.1)));
    }
    sink.write(
        "iterations_comparison.csv",
        &table_to_string(
            &[
                "n",
                "m",
                "sspg_iterations",
                "sspg_final_dist",
                "t_sspg_s",
                "pg_iters_to_neighborhood",
                "t_pg_to_neighborhood_s",
                "t_pg_to_sspg_accuracy_s",
                "pg_iterations",
                "t_pg_s",
                "pg_converged",
            ],
            &rows,
        )?,
    )?;
    let Some((n, worst, t_sspg, t_pg)) = last else {
        return Ok(());
    };
    sink.manifest.verdict_push(
        "iterations_comparison.sspg_reaches_neighborhood",
        worst <= c.neighborhood,
        format!(
            "n = {n}: largest |x - x*| after {} rounds = {worst:.3e}, target {:.1e}",
            c.rounds, c.neighborhood
        ),
    );
    if cfg.record_wall_time {
        let (ok, detail) = match (t_sspg, t_pg) {
            (Some(a), Some(b)) => {
                let reached = worst <= c.neighborhood;
                let note = if reached {
                    ""
                } else {
                    " (sspg outside the neighborhood)"
                };
                (
                    a < b && reached,
                    format!("n = {n}: sspg {a:.4e} s, pg {b:.4e} s{note}"),
                )
            }
            (Some(a), None) => (
                false,
                format!("n = {n}: sspg {a:.4e} s, pg never reached the neighborhood"),
            ),
            _ => (false, "timing unavailable".into()),
        };
        sink.manifest
            .verdict_push("iterations_comparison.sspg_faster_than_pg", ok, detail);
    }
    Ok(())
}

fn rate_sweep(cfg: &ExperimentConfig, c: &RateSweep, sink: &mut Sink) -> Result<()> {
    let p = sr_instance(c.n, c.m, c.alpha, c.lambda, cfg.seeds.base)?;
    let (x_star, _) = reference_solution(&p, c.reference_tol)?;
    let lf = p.sr_constants().lipschitz;
    let x0 = c.x0.build(c.n);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for &gamma in &c.gammas {
        let sched = ScheduleConfig {
            kind: ScheduleKind::Polynomial,
            mu0: c.mu0,
            gamma,
            clamp: c.clamp,
            mu0_over_n: false,
        }
        .build(lf, c.n);
        let mean = run_monte_carlo(&p, &p, &sched, cfg.seeds.range(), c.horizon, &x0, &x_star)?;
        sink.write(
            &format!("rate_gamma{gamma}.csv"),
            &mean_trace_to_csv(&mean)?,
        )?;
        let name = format!("rate_sweep.gamma_{gamma}");
        match fit_rate_exponent(&mean, c.window, gamma) {
            Ok(rep) => {
                rows.push(vec![
                    fmt_f64(gamma),
                    fmt_f64(rep.slope),
                    fmt_f64(rep.r_squared),
                    rep.window.0.to_string(),
                    rep.window.1.to_string(),
                    rep.verdict.passed().to_string(),
                ]);
                sink.manifest.verdict_push(
                    &name,
                    rep.verdict.passed(),
                    format!(
                        "slope {:.4} (target {:.2}), R^2 {:.4}",
                        rep.slope, -gamma, rep.r_squared
                    ),
                );
            }
            Err(e) => sink.manifest.verdict_push(&name, false, e.to_string()),
        }
        series.push(mean_trace_series(&format!("gamma = {gamma}"), &mean));
    }
    sink.write(
        "rates.csv",
        &table_to_string(
            &["gamma", "slope", "r_squared", "k_min", "k_max", "pass"],
            &rows,
        )?,
    )?;
    sink.plot(
        "rates.svg",
        "E|x^k - x*|^2",
        "k",
        "mean squared distance",
        &series,
    )
}

fn cfp_linear(cfg: &ExperimentConfig, c: &CfpLinear, sink: &mut Sink) -> Result<()> {
    let problem = match &c.instance {
        Some(path) => CfpProblem::load(path)?,
        None => two_lines(c.theta),
    };
    let n = problem.dim();
    let x0 = match &c.x0 {
        Some(x) => {
            cfg_ensure(x.len() == n, || "x0 has the wrong dimension".into())?;
            x.clone()
        }
        None => {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        }
    };
    let d0 = problem.cfp_distance(&x0, 1e-13)?.distance;
    let radius = c.kappa_radius.unwrap_or(10.0 * d0.max(1e-3));
    let kappa = problem.estimate_kappa(c.kappa_samples, radius, cfg.seeds.base)?;
    let metric = |x: &[f64]| problem.project_intersection(x, 1e-13).1.distance.powi(2);
    let mean = monte_carlo_metric(
        &problem.zero_smooth(),
        &problem,
        &StepsizeSchedule::constant(1.0),
        &cfg.seeds.range().seeds(),
        c.horizon,
        &x0,
        &metric,
    )?;
    sink.write("cfp_mean.csv", &mean_trace_to_csv(&mean)?)?;

    let d0_sq = d0 * d0;
    let worst = mean
        .records
        .iter()
        .map(|r| r.mean_sq_dist / cfp_linear_bound(r.k, kappa, d0_sq).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    sink.manifest.verdict_push(
        "cfp_linear.envelope",
        mean.records
            .iter()
            .all(|r| r.mean_sq_dist <= cfp_linear_bound(r.k, kappa, d0_sq)),
        format!("kappa = {kappa:.6}, largest mean/bound ratio {worst:.3e}"),
    );
    let pos: Vec<_> = mean
        .records
        .iter()
        .filter(|r| r.mean_sq_dist > 0.0)
        .collect();
    let ks: Vec<f64> = pos.iter().map(|r| r.k as f64).collect();
    let ys: Vec<f64> = pos.iter().map(|r| r.mean_sq_dist).collect();
    match geometric_fit(&ks, &ys) {
        Ok((rate, r2)) => sink.manifest.verdict_push(
            "cfp_linear.geometric_fit",
            r2 >= c.min_r_squared,
            format!(
                "log-rate {rate:.4} per step, R^2 {r2:.4} over {} points",
                ks.len()
            ),
        ),
        Err(e) => sink
            .manifest
            .verdict_push("cfp_linear.geometric_fit", false, e.to_string()),
    }
    let bound: Vec<(f64, f64)> = mean
        .records
        .iter()
        .filter(|r| r.k > 0)
        .map(|r| (r.k as f64, cfp_linear_bound(r.k, kappa, d0_sq)))
        .collect();
    sink.plot(
        "cfp.svg",
        "E dist^2(x^k, X)",
        "k",
        "mean squared distance",
        &[
            mean_trace_series("RAP", &mean),
            Series::new("(1 - kappa/8)^k d0^2", bound),
        ],
    )
}

fn recurrence_check(cfg: &ExperimentConfig, c: &RecurrenceCheck, sink: &mut Sink) -> Result<()> {
    let p = sr_instance(c.n, c.m, c.alpha, c.lambda, cfg.seeds.base)?;
    let (x_star, _) = reference_solution(&p, c.reference_tol)?;
    let sigma = p.zero_mean_subgradient_sigma(&x_star, c.sigma_tol)?;
    let constants = p.sr_constants().with_sigma_noise(sigma.sigma);
    let mu = c.mu.unwrap_or(1.0 / (4.0 * constants.lipschitz));
    let sched = StepsizeSchedule::constant(mu).clamped_to_lipschitz(constants.lipschitz);
    let mu = sched.stepsize(1)?;
    let x0 = c.x0.build(c.n);
    let mean = run_monte_carlo(&p, &p, &sched, cfg.seeds.range(), c.horizon, &x0, &x_star)?;
    sink.write("recurrence_mean.csv", &mean_trace_to_csv(&mean)?)?;

    let report = check_recurrence(&mean, &constants, &sched, c.sigma_multiplier)?;
    let rows: Vec<Vec<String>> = report
        .violations
        .iter()
        .map(|v| {
            vec![
                v.k.to_string(),
                fmt_f64(v.lhs),
                fmt_f64(v.rhs),
                fmt_f64(v.allowance),
            ]
        })
        .collect();
    sink.write(
        "recurrence_violations.csv",
        &table_to_string(&["k", "lhs", "rhs", "allowance"], &rows)?,
    )?;
    sink.manifest.verdict_push(
        "recurrence_check.recurrence",
        report.passed(),
        format!(
            "{} violations in {} steps at {}-sigma slack; Sigma = {:.6e} (certificate {:.1e})",
            report.violations.len(),
            report.checked,
            c.sigma_multiplier,
            sigma.sigma,
            sigma.certificate
        ),
    );

    let sf = constants.strong_convexity;
    let floor = constant_step_floor(mu, sf, sigma.sigma);
    let plateau = plateau_stats(&mean, c.tail_fraction)?;
    let limit = floor * 1.1 + 5.0 * plateau.stderr;
    sink.manifest.verdict_push(
        "recurrence_check.plateau",
        plateau.level <= limit,
        format!(
            "tail level {:.6e}, limit {:.6e} (floor {:.6e})",
            plateau.level, limit, floor
        ),
    );
    let d0_sq = mean.initial().unwrap_or(0.0);
    let above: Vec<u64> = mean
        .records
        .iter()
        .filter(|r| {
            r.mean_sq_dist > constant_step_bound(r.k, mu, sf, d0_sq, sigma.sigma) + 5.0 * r.stderr
        })
        .map(|r| r.k)
        .collect();
    sink.manifest.verdict_push(
        "recurrence_check.bound_curve",
        above.is_empty(),
        format!("{} recorded iterations above the bound curve", above.len()),
    );
    let bound: Vec<(f64, f64)> = mean
        .records
        .iter()
        .filter(|r| r.k > 0)
        .map(|r| {
            (
                r.k as f64,
                constant_step_bound(r.k, mu, sf, d0_sq, sigma.sigma),
            )
        })
        .collect();
    sink.plot(
        "recurrence.svg",
        "constant stepsize",
        "k",
        "mean squared distance",
        &[
            mean_trace_series("SSPG", &mean),
            Series::new("bound", bound),
        ],
    )
}
