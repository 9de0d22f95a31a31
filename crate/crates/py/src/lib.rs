//! Python bindings for `sspg-core`.

#![allow(clippy::useless_conversion)]

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sspg_core::analysis::{fit_rate_exponent, plateau_stats};
use sspg_core::baseline::{reference_solution, PgConfig};
use sspg_core::cfp::{project_set, two_lines};
use sspg_core::csvio::{mean_trace_to_csv, trace_to_csv};
use sspg_core::experiment::{run_experiment as run_core_experiment, ExperimentConfig};
use sspg_core::montecarlo::{run_monte_carlo, SeedRange};
use sspg_core::oracle::SampleIndex;
use sspg_core::rng::GENERATOR_NAME;
use sspg_core::{RunOptions, SspgError, StepsizeSchedule, StoppingRule};

fn to_py(e: SspgError) -> PyErr {
    match e {
        SspgError::Io { .. } => PyOSError::new_err(e.to_string()),
        SspgError::Config(_)
        | SspgError::InvalidArgument(_)
        | SspgError::DimensionMismatch { .. }
        | SspgError::Format { .. } => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn check_dim(x: &[f64], n: usize) -> PyResult<()> {
    if x.len() == n {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!(
            "expected a vector of length {n}, got {}",
            x.len()
        )))
    }
}

fn check_index(xi: usize, m: usize) -> PyResult<SampleIndex> {
    if xi < m {
        Ok(SampleIndex(xi))
    } else {
        Err(PyValueError::new_err(format!(
            "sample index {xi} out of range for {m} samples"
        )))
    }
}

fn schedule(mu0: f64, gamma: Option<f64>, clamp: Option<f64>, lipschitz: f64) -> StepsizeSchedule {
    let s = match gamma {
        Some(g) => StepsizeSchedule::polynomial(mu0, g),
        None => StepsizeSchedule::constant(mu0),
    };
    match clamp {
        Some(c) => s.with_clamp(c),
        None => s.clamped_to_lipschitz(lipschitz),
    }
}

/// Cosparse sparse-representation instance.
#[pyclass(module = "sspg", frozen)]
#[derive(Clone)]
struct SrProblem {
    inner: sspg_core::SrProblem,
}

#[pymethods]
impl SrProblem {
    /// Random instance with `m` samples in dimension `n`.
    #[staticmethod]
    #[pyo3(signature = (n, m, alpha, lambda_, seed))]
    fn generate(n: usize, m: usize, alpha: f64, lambda_: f64, seed: u64) -> PyResult<Self> {
        let inner = sspg_core::generate_sr_instance(n, m, alpha, lambda_, seed).map_err(to_py)?;
        Ok(SrProblem { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(SrProblem {
            inner: sspg_core::SrProblem::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda()
    }

    fn grad(&self, x: Vec<f64>, xi: usize) -> PyResult<Vec<f64>> {
        check_dim(&x, self.inner.n())?;
        Ok(self.inner.sr_grad(&x, check_index(xi, self.inner.m())?))
    }

    fn prox(&self, y: Vec<f64>, xi: usize, mu: f64) -> PyResult<Vec<f64>> {
        check_dim(&y, self.inner.n())?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(PyValueError::new_err("mu must be positive"));
        }
        Ok(self.inner.sr_prox(&y, check_index(xi, self.inner.m())?, mu))
    }

    fn objective(&self, x: Vec<f64>) -> PyResult<f64> {
        check_dim(&x, self.inner.n())?;
        Ok(self.inner.objective(&x))
    }

    /// `{"lipschitz", "strong_convexity"}` of the smooth part.
    fn constants<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.sr_constants();
        let d = PyDict::new_bound(py);
        d.set_item("lipschitz", c.lipschitz)?;
        d.set_item("strong_convexity", c.strong_convexity)?;
        Ok(d)
    }

    /// High-accuracy minimizer and the number of proximal-gradient iterations used.
    #[pyo3(signature = (tol = 1e-10))]
    fn reference_solution(&self, py: Python<'_>, tol: f64) -> PyResult<(Vec<f64>, f64)> {
        py.allow_threads(|| reference_solution(&self.inner, tol))
            .map_err(to_py)
    }

    /// Noise constant at `x_star` from a zero-mean subgradient representation.
    #[pyo3(signature = (x_star, tol = 1e-6))]
    fn sigma(&self, x_star: Vec<f64>, tol: f64) -> PyResult<f64> {
        check_dim(&x_star, self.inner.n())?;
        Ok(self
            .inner
            .zero_mean_subgradient_sigma(&x_star, tol)
            .map_err(to_py)?
            .sigma)
    }

    fn __repr__(&self) -> String {
        format!(
            "SrProblem(n={}, m={}, alpha={}, lambda={})",
            self.inner.n(),
            self.inner.m(),
            self.inner.alpha(),
            self.inner.lambda()
        )
    }
}

/// Intersection of halfspaces, hyperplanes and balls.
#[pyclass(module = "sspg", frozen)]
#[derive(Clone)]
struct CfpProblem {
    inner: sspg_core::CfpProblem,
}

#[pymethods]
impl CfpProblem {
    /// Parses a JSON list of sets.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(CfpProblem {
            inner: sspg_core::CfpProblem::from_json(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(CfpProblem {
            inner: sspg_core::CfpProblem::load(path).map_err(to_py)?,
        })
    }

    /// Two lines through the origin of the plane at angle `theta`.
    #[staticmethod]
    fn two_lines(theta: f64) -> Self {
        CfpProblem {
            inner: two_lines(theta),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.sets().len()
    }

    fn project(&self, x: Vec<f64>, i: usize) -> PyResult<Vec<f64>> {
        check_dim(&x, self.inner.dim())?;
        let i = check_index(i, self.inner.sets().len())?;
        Ok(project_set(&self.inner.sets()[i.0], &x))
    }

    #[pyo3(signature = (x, tol = 1e-12))]
    fn distance(&self, x: Vec<f64>, tol: f64) -> PyResult<f64> {
        check_dim(&x, self.inner.dim())?;
        Ok(self.inner.cfp_distance(&x, tol).map_err(to_py)?.distance)
    }

    #[pyo3(signature = (samples = 2000, radius = 10.0, seed = 0))]
    fn estimate_kappa(
        &self,
        py: Python<'_>,
        samples: usize,
        radius: f64,
        seed: u64,
    ) -> PyResult<f64> {
        py.allow_threads(|| self.inner.estimate_kappa(samples, radius, seed))
            .map_err(to_py)
    }

    /// Randomized alternating projections.
    fn run_rap(&self, py: Python<'_>, seed: u64, k_max: u64, x0: Vec<f64>) -> PyResult<Trace> {
        check_dim(&x0, self.inner.dim())?;
        let t = py
            .allow_threads(|| self.inner.run_rap(seed, k_max, &x0))
            .map_err(to_py)?;
        Ok(Trace { inner: t })
    }
}

#[pyclass(module = "sspg", frozen)]
struct Trace {
    inner: sspg_core::Trace,
}

#[pymethods]
impl Trace {
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn final_x(&self) -> Vec<f64> {
        self.inner.final_x.clone()
    }

    #[getter]
    fn schedule(&self) -> String {
        self.inner.schedule.clone()
    }

    /// Recorded rows as `(k, sq_dist_to_opt, objective, dist_to_feasible, wall_time_s)`.
    #[allow(clippy::type_complexity)]
    fn records(&self) -> Vec<(u64, Option<f64>, Option<f64>, Option<f64>, Option<f64>)> {
        self.inner
            .records
            .iter()
            .map(|r| {
                (
                    r.k,
                    r.sq_dist_to_opt,
                    r.objective,
                    r.dist_to_feasible,
                    r.wall_time_s,
                )
            })
            .collect()
    }

    fn to_csv(&self) -> PyResult<String> {
        trace_to_csv(&self.inner.records).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }
}

#[pyclass(module = "sspg", frozen)]
struct MeanTrace {
    inner: sspg_core::MeanTrace,
}

#[pymethods]
impl MeanTrace {
    #[getter]
    fn runs(&self) -> usize {
        self.inner.runs
    }

    /// Rows as `(k, mean_sq_dist, stderr)`.
    fn records(&self) -> Vec<(u64, f64, f64)> {
        self.inner
            .records
            .iter()
            .map(|r| (r.k, r.mean_sq_dist, r.stderr))
            .collect()
    }

    /// Log-log fit over `window`; returns `(slope, r_squared, passed)`.
    fn fit_rate(&self, window: (u64, u64), gamma: f64) -> PyResult<(f64, f64, bool)> {
        let r = fit_rate_exponent(&self.inner, window, gamma).map_err(to_py)?;
        Ok((r.slope, r.r_squared, r.verdict.passed()))
    }

    /// Mean level and standard error over the last `tail_fraction` of the trace.
    #[pyo3(signature = (tail_fraction = 0.25))]
    fn plateau(&self, tail_fraction: f64) -> PyResult<(f64, f64)> {
        let p = plateau_stats(&self.inner, tail_fraction).map_err(to_py)?;
        Ok((p.level, p.stderr))
    }

    fn to_csv(&self) -> PyResult<String> {
        mean_trace_to_csv(&self.inner).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }
}

/// SSPG on an SR instance. `gamma=None` gives a constant step `mu0`.
/// Without `clamp` the step is capped at `1 / (2 L_f)`.
#[pyfunction]
#[pyo3(signature = (problem, mu0, max_iter, seed = 0, gamma = None, clamp = None, x0 = None, reference = None, eps = None))]
#[allow(clippy::too_many_arguments)]
fn run_sspg(
    py: Python<'_>,
    problem: &SrProblem,
    mu0: f64,
    max_iter: u64,
    seed: u64,
    gamma: Option<f64>,
    clamp: Option<f64>,
    x0: Option<Vec<f64>>,
    reference: Option<Vec<f64>>,
    eps: Option<f64>,
) -> PyResult<Trace> {
    let p = &problem.inner;
    let sched = schedule(mu0, gamma, clamp, p.sr_constants().lipschitz);
    let stop = match eps {
        Some(eps) => StoppingRule::DistToReference { eps, cap: max_iter },
        None => StoppingRule::MaxIter { cap: max_iter },
    };
    let opts = RunOptions {
        x0,
        reference,
        ..RunOptions::default()
    };
    let t = py
        .allow_threads(|| sspg_core::run_sspg(p, p, &sched, seed, &stop, &opts))
        .map_err(to_py)?;
    Ok(Trace { inner: t })
}

/// Deterministic proximal gradient baseline.
#[pyfunction]
#[pyo3(signature = (problem, tol = 1e-6, max_iter = 100_000, x0 = None, reference = None))]
fn run_pg(
    py: Python<'_>,
    problem: &SrProblem,
    tol: f64,
    max_iter: u64,
    x0: Option<Vec<f64>>,
    reference: Option<Vec<f64>>,
) -> PyResult<Trace> {
    let p = &problem.inner;
    let cfg = PgConfig {
        outer_tol: tol,
        outer_cap: max_iter,
        ..PgConfig::for_problem(p)
    };
    let opts = RunOptions {
        x0,
        reference,
        ..RunOptions::default()
    };
    let t = py
        .allow_threads(|| sspg_core::run_pg(p, &cfg, &opts))
        .map_err(to_py)?;
    Ok(Trace { inner: t })
}

/// Seed-averaged `E |x^k - x*|^2` for `k = 0..=horizon`.
#[pyfunction]
#[pyo3(signature = (problem, mu0, horizon, runs, reference, base_seed = 0, gamma = None, clamp = None, x0 = None))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    py: Python<'_>,
    problem: &SrProblem,
    mu0: f64,
    horizon: u64,
    runs: usize,
    reference: Vec<f64>,
    base_seed: u64,
    gamma: Option<f64>,
    clamp: Option<f64>,
    x0: Option<Vec<f64>>,
) -> PyResult<MeanTrace> {
    let p = &problem.inner;
    let sched = schedule(mu0, gamma, clamp, p.sr_constants().lipschitz);
    let x0 = x0.unwrap_or_else(|| vec![1.0; p.n()]);
    let seeds = SeedRange { base_seed, runs };
    let m = py
        .allow_threads(|| run_monte_carlo(p, p, &sched, seeds, horizon, &x0, &reference))
        .map_err(to_py)?;
    Ok(MeanTrace { inner: m })
}

type Verdicts = Vec<(String, bool, String)>;

/// Runs a JSON experiment config, writing artifacts into `out`.
/// Returns `(all_passed, [(name, passed, detail), ...])`.
#[pyfunction]
fn run_experiment(py: Python<'_>, config_json: &str, out: PathBuf) -> PyResult<(bool, Verdicts)> {
    let mut cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    cfg.apply_env().map_err(to_py)?;
    let m = py
        .allow_threads(|| run_core_experiment(&cfg, &out))
        .map_err(to_py)?;
    let verdicts = m
        .verdicts
        .iter()
        .map(|v| (v.name.clone(), v.passed, v.detail.clone()))
        .collect();
    Ok((m.passed(), verdicts))
}

#[pymodule]
fn sspg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("GENERATOR", GENERATOR_NAME)?;
    m.add_class::<SrProblem>()?;
    m.add_class::<CfpProblem>()?;
    m.add_class::<Trace>()?;
    m.add_class::<MeanTrace>()?;
    m.add_function(wrap_pyfunction!(run_sspg, m)?)?;
    m.add_function(wrap_pyfunction!(run_pg, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
