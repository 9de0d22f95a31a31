//! `sspg`: runs experiments and reports verdicts.
//!
//! Exit codes: 0 when every verdict passes, 1 when any fails or a run errors,
//! 2 for an invalid config or command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sspg_core::experiment::{
    run_experiment, verify_manifest, CfpLinear, Experiment, ExperimentConfig, Manifest, RateSweep,
    SeedConfig, MANIFEST_FILE,
};
use sspg_core::SspgError;

#[derive(Parser)]
#[command(
    name = "sspg",
    version,
    about = "Stochastic splitting proximal gradient experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Leave wall-time cells empty so artifacts are byte-reproducible.
    #[arg(long)]
    no_wall_time: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit decay exponents of the mean squared distance under decreasing steps.
    Rates {
        /// Step exponents, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        gamma: Vec<f64>,
        /// Number of seeds.
        #[arg(long)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        base_seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu0: Option<f64>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Fit window as `kmin,kmax`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<u64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Randomized alternating projections against the linear-rate envelope.
    Cfp {
        /// JSON list of sets; two lines at angle `theta` when absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        base_seed: u64,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        kappa_samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Check the hashes recorded in a run's manifest.
    Verify { dir: PathBuf },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<SspgError> for Failure {
    fn from(e: SspgError) -> Self {
        match e {
            SspgError::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn default_out(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("sspg-out").join(cfg.experiment.name()))
}

fn execute(mut cfg: ExperimentConfig, common: &Common) -> Result<Manifest, Failure> {
    cfg.apply_env()?;
    cfg.plot |= common.plot;
    if common.no_wall_time {
        cfg.record_wall_time = false;
    }
    cfg.validate()?;
    let out = common.out.clone().unwrap_or_else(|| default_out(&cfg));
    let run = || run_experiment(&cfg, &out);
    let manifest = match common.threads {
        Some(0) => return Err(Failure::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Failure::Run(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    println!("wrote {}", out.join(MANIFEST_FILE).display());
    Ok(manifest)
}

fn verify(dir: &Path) -> Result<bool, Failure> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    verify_manifest(dir, &manifest)?;
    println!("{} artifacts verified", manifest.artifacts.len());
    Ok(manifest.passed())
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    let manifest = match cli.command {
        Command::Run { config, common } => {
            let cfg =
                ExperimentConfig::load(&config).map_err(|e| Failure::Config(e.to_string()))?;
            execute(cfg, &common)?
        }
        Command::Rates {
            gamma,
            seeds,
            base_seed,
            n,
            m,
            alpha,
            lambda,
            mu0,
            horizon,
            window,
            common,
        } => {
            let d = RateSweep::default();
            let horizon = horizon.unwrap_or(d.horizon);
            let window = match window.as_deref() {
                Some([a, b]) => (*a, *b),
                _ => (d.window.0.min(horizon / 2).max(1), horizon),
            };
            let sweep = RateSweep {
                n: n.unwrap_or(d.n),
                m: m.unwrap_or(d.m),
                alpha: alpha.unwrap_or(d.alpha),
                lambda: lambda.unwrap_or(d.lambda),
                gammas: gamma,
                mu0: mu0.unwrap_or(d.mu0),
                horizon,
                window,
                ..d
            };
            let mut cfg = ExperimentConfig::new(Experiment::RateSweep(sweep));
            cfg.seeds = SeedConfig {
                base: base_seed,
                runs: seeds,
            };
            execute(cfg, &common)?
        }
        Command::Cfp {
            instance,
            theta,
            seeds,
            base_seed,
            horizon,
            kappa_samples,
            common,
        } => {
            let d = CfpLinear::default();
            let c = CfpLinear {
                instance,
                theta: theta.unwrap_or(d.theta),
                horizon: horizon.unwrap_or(d.horizon),
                kappa_samples: kappa_samples.unwrap_or(d.kappa_samples),
                ..d
            };
            let mut cfg = ExperimentConfig::new(Experiment::CfpLinear(c));
            cfg.seeds = SeedConfig {
                base: base_seed,
                runs: seeds,
            };
            execute(cfg, &common)?
        }
        Command::Verify { dir } => return verify(&dir),
    };
    for v in &manifest.verdicts {
        println!(
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.detail
        );
    }
    for u in &manifest.unconverged {
        println!("unconverged: {u}");
    }
    Ok(manifest.passed())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("sspg: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("sspg: {msg}");
            ExitCode::from(1)
        }
    }
}
