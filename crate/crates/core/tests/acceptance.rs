//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 so that a failing trend shows up in the report without breaking the test
//! suite; set `SSPG_ACCEPTANCE_STRICT=1` to exit 1 on any failure.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use common::*;
use rand::Rng;
use sspg_core::analysis::geometric_fit;
use sspg_core::baseline::{reference_solution, run_pg, PgConfig};
use sspg_core::cfp::{project_set, CfpProblem, ConvexSet};
use sspg_core::engine::{run_sspg, sspg_step, RunOptions, SolverState, StoppingRule, Trace};
use sspg_core::experiment::{
    run_experiment, AtomsScaling, CfpLinear, Experiment, ExperimentConfig, IterationsComparison,
    Manifest, RateSweep, RecurrenceCheck, SeedConfig,
};
use sspg_core::oracle::{prox_optimality_residual, SampleIndex, SharedProx, ZeroProx, ZeroSmooth};
use sspg_core::schedule::StepsizeSchedule;
use sspg_core::sr::{generate_sr_instance, SrProblem};

type Outcome = Result<(bool, String), String>;

fn prox_correctness() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(101);
    let problems: Vec<SrProblem> = (0..10)
        .map(|s| {
            let n = 2 + s % 7;
            generate_sr_instance(
                n,
                3 * n,
                0.3,
                log_uniform(&mut r, 1e-3, 5.0),
                500 + s as u64,
            )
            .unwrap()
        })
        .collect();
    let (mut sr_dev, mut sr_res): (f64, f64) = (0.0, 0.0);
    for trial in 0..1000 {
        let p = &problems[trial % problems.len()];
        let xi = SampleIndex(r.gen_range(0..p.m()));
        let mu = log_uniform(&mut r, 1e-4, 10.0);
        let y = normal_vec(&mut r, p.n());
        let z = p.sr_prox(&y, xi, mu);
        let oracle = line_search_prox(p.delta().row(xi.0), p.h_weight(), &y, mu);
        sr_dev = sr_dev.max(dist(&z, &oracle) / nrm(&y).max(1.0));
        sr_res =
            sr_res.max(prox_optimality_residual(p, &y, &z, xi, mu).map_err(|e| e.to_string())?);
    }
    let (mut vi, mut qp, mut cfp_res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let n = r.gen_range(1..6);
        let s = random_set(&mut r, n);
        let x: Vec<f64> = normal_vec(&mut r, n).iter().map(|v| 3.0 * v).collect();
        let z = project_set(&s, &x);
        for _ in 0..100 {
            let w = feasible_sample(&mut r, &s);
            let lhs: f64 = x
                .iter()
                .zip(&z)
                .zip(&w)
                .map(|((a, b), c)| (a - b) * (c - b))
                .sum();
            vi = vi.max(lhs / (1.0 + dist(&x, &z) * dist(&w, &z)));
        }
        if let ConvexSet::Halfspace { a, b } = &s {
            qp = qp.max(dist(
                &halfspace_qp(std::slice::from_ref(a), &[*b], &x, 2000),
                &z,
            ));
        }
        let p = CfpProblem::new(vec![s], None).map_err(|e| e.to_string())?;
        let mu = log_uniform(&mut r, 1e-3, 10.0);
        cfp_res = cfp_res.max(
            prox_optimality_residual(&p, &x, &z, SampleIndex(0), mu).map_err(|e| e.to_string())?,
        );
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = sr_dev <= 1e-8
        && vi <= 1e-8
        && qp <= 1e-8
        && sr_res <= 1e-9
        && cfp_res <= 1e-9
        && secs < 10.0;
    Ok((
        ok,
        format!(
            "SR deviation {sr_dev:.1e}, residual {sr_res:.1e}; projection VI {vi:.1e}, QP {qp:.1e}, residual {cfp_res:.1e}; {secs:.2} s"
        ),
    ))
}

fn gradient_correctness() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for trial in 0..500 {
        let n = 1 + trial % 9;
        let p = generate_sr_instance(
            n,
            2 * n + 1,
            log_uniform(&mut r, 1e-3, 2.0),
            0.1,
            trial as u64,
        )
        .map_err(|e| e.to_string())?;
        let xi = SampleIndex(r.gen_range(0..p.m()));
        let x: Vec<f64> = normal_vec(&mut r, n).iter().map(|v| 2.0 * v).collect();
        let g = p.sr_grad(&x, xi);
        let fd: Vec<f64> = (0..n)
            .map(|j| {
                let h = 1e-5 * x[j].abs().max(1.0);
                let mut a = x.clone();
                let mut b = x.clone();
                a[j] += h;
                b[j] -= h;
                (sspg_core::SmoothOracle::f_value(&p, &a, xi)
                    - sspg_core::SmoothOracle::f_value(&p, &b, xi))
                    / (2.0 * h)
            })
            .collect();
        worst = worst.max(dist(&g, &fd) / nrm(&g).max(1e-8));
    }
    Ok((
        worst <= 1e-6,
        format!("max relative error {worst:.2e} over 500 points"),
    ))
}

fn reductions() -> Outcome {
    const STEPS: u64 = 1000;
    let sched = StepsizeSchedule::polynomial(0.02, 0.75);
    let mu = |k| sched.stepsize(k).unwrap();
    let p = generate_sr_instance(6, 20, 0.4, 0.2, 1).map_err(|e| e.to_string())?;
    let x0 = vec![1.0; 6];
    let mut passed = Vec::new();

    // SGD
    let mut state = SolverState::new(x0.clone(), 42);
    let mut idx = IndexStream::new(42);
    let mut x = x0.clone();
    for k in 1..=STEPS {
        sspg_step(&p, &ZeroProx { samples: 20 }, &mut state, mu(k)).map_err(|e| e.to_string())?;
        let g = p.sr_grad(&x, SampleIndex(idx.next(20)));
        x = x.iter().zip(&g).map(|(a, b)| a - mu(k) * b).collect();
    }
    passed.push(("SGD", state.x() == &x[..]));

    // proximal SGD
    let shared = SharedProx {
        inner: &p,
        fixed: SampleIndex(3),
        samples: 20,
    };
    let mut state = SolverState::new(x0.clone(), 43);
    let mut idx = IndexStream::new(43);
    let mut x = x0.clone();
    for k in 1..=STEPS {
        sspg_step(&p, &shared, &mut state, mu(k)).map_err(|e| e.to_string())?;
        let g = p.sr_grad(&x, SampleIndex(idx.next(20)));
        let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - mu(k) * b).collect();
        x = p.sr_prox(&y, SampleIndex(3), mu(k));
    }
    passed.push(("prox-SGD", state.x() == &x[..]));

    // stochastic proximal point
    let mut state = SolverState::new(x0.clone(), 44);
    let mut idx = IndexStream::new(44);
    let mut x = x0.clone();
    for k in 1..=STEPS {
        sspg_step(
            &ZeroSmooth {
                dim: 6,
                samples: 20,
            },
            &p,
            &mut state,
            mu(k),
        )
        .map_err(|e| e.to_string())?;
        x = p.sr_prox(&x, SampleIndex(idx.next(20)), mu(k));
    }
    passed.push(("SPP", state.x() == &x[..]));

    // randomized alternating projections
    let sets = vec![
        ConvexSet::Halfspace {
            a: vec![1.0, 2.0, 0.0],
            b: 1.0,
        },
        ConvexSet::Hyperplane {
            a: vec![0.0, 1.0, -1.0],
            b: 0.0,
        },
        ConvexSet::Ball {
            center: vec![0.0; 3],
            radius: 2.0,
        },
    ];
    let c = CfpProblem::new(sets.clone(), Some(vec![0.0; 3])).map_err(|e| e.to_string())?;
    let mut state = SolverState::new(vec![5.0, -3.0, 4.0], 45);
    let mut idx = IndexStream::new(45);
    let mut x = vec![5.0, -3.0, 4.0];
    for _ in 0..STEPS {
        sspg_step(&c.zero_smooth(), &c, &mut state, 1.0).map_err(|e| e.to_string())?;
        x = project_set(&sets[idx.next(3)], &x);
    }
    passed.push(("RAP", state.x() == &x[..]));

    let ok = passed.iter().all(|(_, b)| *b);
    let detail = passed
        .iter()
        .map(|(n, b)| format!("{n} {}", if *b { "equal" } else { "differs" }))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((ok, format!("{detail} over {STEPS} steps")))
}

fn run_in(dir: &Path, cfg: &ExperimentConfig) -> Result<Manifest, String> {
    run_experiment(cfg, dir).map_err(|e| e.to_string())
}

fn verdicts(m: &Manifest, prefix: &str) -> (bool, String) {
    let picked: Vec<_> = m
        .verdicts
        .iter()
        .filter(|v| v.name.starts_with(prefix))
        .collect();
    let ok = !picked.is_empty() && picked.iter().all(|v| v.passed);
    let detail = picked
        .iter()
        .map(|v| {
            format!(
                "{} {}: {}",
                v.name,
                if v.passed { "ok" } else { "failed" },
                v.detail
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn with_seeds(e: Experiment, base: u64, runs: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(e);
    cfg.seeds = SeedConfig { base, runs };
    cfg
}

fn recurrence_manifest(dir: &Path) -> Result<Manifest, String> {
    run_in(
        dir,
        &with_seeds(
            Experiment::RecurrenceCheck(RecurrenceCheck::default()),
            1,
            200,
        ),
    )
}

fn recurrence(m: &Manifest) -> Outcome {
    Ok(verdicts(m, "recurrence_check.recurrence"))
}

fn plateau(m: &Manifest) -> Outcome {
    let (a, da) = verdicts(m, "recurrence_check.plateau");
    let (b, db) = verdicts(m, "recurrence_check.bound_curve");
    Ok((a && b, format!("{da}; {db}")))
}

fn rate(dir: &Path) -> Outcome {
    let m = run_in(
        dir,
        &with_seeds(Experiment::RateSweep(RateSweep::default()), 3, 200),
    )?;
    Ok(verdicts(&m, "rate_sweep."))
}

fn cfp_linear(dir: &Path) -> Outcome {
    let m = run_in(
        dir,
        &with_seeds(Experiment::CfpLinear(CfpLinear::default()), 1, 200),
    )?;
    Ok(verdicts(&m, "cfp_linear."))
}

fn deterministic_limit() -> Outcome {
    let p = generate_sr_instance(8, 1, 0.5, 0.3, 17).map_err(|e| e.to_string())?;
    let (x_star, _) = reference_solution(&p, 1e-13).map_err(|e| e.to_string())?;
    let lf = p.sr_constants().lipschitz;
    let x0 = vec![1.0; 8];
    let opts = RunOptions::default()
        .lean()
        .with_x0(x0.clone())
        .with_reference(x_star.clone());
    let sspg = run_sspg(
        &p,
        &p,
        &StepsizeSchedule::constant(0.5 / lf),
        0,
        &StoppingRule::DistToReference {
            eps: 1e-9,
            cap: 1_000_000,
        },
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let cfg = PgConfig {
        outer_tol: 1e-12,
        ..PgConfig::for_problem(&p)
    };
    let pg = run_pg(&p, &cfg, &opts).map_err(|e| e.to_string())?;
    let linear = |t: &Trace| -> Result<f64, String> {
        let pts: Vec<(f64, f64)> = t
            .records
            .iter()
            .filter_map(|r| {
                r.sq_dist_to_opt
                    .filter(|d| *d > 1e-24)
                    .map(|d| (r.k as f64, d))
            })
            .collect();
        if pts.len() < 3 {
            return Ok(1.0);
        }
        let (ks, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (rate, r2) = geometric_fit(&ks, &ys).map_err(|e| e.to_string())?;
        Ok(if rate < 0.0 { r2 } else { 0.0 })
    };
    let (r_s, r_p) = (linear(&sspg)?, linear(&pg)?);
    let d_s = dist(&sspg.final_x, &x_star);
    let d_p = dist(&pg.final_x, &x_star);
    let gap = dist(&sspg.final_x, &pg.final_x);
    let ok = d_s <= 1e-6 && d_p <= 1e-6 && gap <= 1e-6 && r_s >= 0.9 && r_p >= 0.9;
    Ok((
        ok,
        format!(
            "SSPG {} iters, dist {d_s:.1e}, log-linear R^2 {r_s:.4}; PG {} iters, dist {d_p:.1e}, R^2 {r_p:.4}; gap {gap:.1e}",
            sspg.iterations, pg.iterations
        ),
    ))
}

fn atoms(dir: &Path) -> Outcome {
    let m = run_in(
        dir,
        &ExperimentConfig::new(Experiment::AtomsScaling(AtomsScaling::default())),
    )?;
    let (ok, detail) = verdicts(&m, "atoms_scaling.");
    Ok((ok && m.unconverged.is_empty(), detail))
}

fn iterations(dir: &Path) -> Outcome {
    let m = run_in(
        dir,
        &ExperimentConfig::new(Experiment::IterationsComparison(
            IterationsComparison::default(),
        )),
    )?;
    Ok(verdicts(&m, "iterations_comparison."))
}

fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter(|e| e.file_name().to_string_lossy().ends_with(".csv"))
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap_or_default(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    let experiments = [
        Experiment::AtomsScaling(AtomsScaling {
            n_min: 5,
            n_max: 15,
            ..Default::default()
        }),
        Experiment::IterationsComparison(IterationsComparison {
            n_values: vec![5, 10],
            ..Default::default()
        }),
        Experiment::RateSweep(RateSweep {
            horizon: 2000,
            window: (100, 2000),
            ..Default::default()
        }),
        Experiment::CfpLinear(CfpLinear {
            horizon: 100,
            kappa_samples: 500,
            ..Default::default()
        }),
        Experiment::RecurrenceCheck(RecurrenceCheck {
            horizon: 500,
            ..Default::default()
        }),
    ];
    let mut files = 0;
    let mut differing = Vec::new();
    for e in experiments {
        let name = e.name();
        let mut cfg = with_seeds(e, 11, 8);
        cfg.record_wall_time = false;
        let a = tempfile::tempdir().map_err(|e| e.to_string())?;
        let b = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_in(a.path(), &cfg)?;
        run_in(b.path(), &cfg)?;
        let (x, y) = (csv_bytes(a.path()), csv_bytes(b.path()));
        files += x.len();
        if x.is_empty() || x != y {
            differing.push(name);
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{files} CSV files byte-identical across reruns of all five experiments")
        } else {
            format!("artifacts differ for {}", differing.join(", "))
        },
    ))
}

fn report(id: usize, name: &str, outcome: Outcome, secs: f64) -> bool {
    let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!(
        "{} {id:>2} {name}: {detail} [{secs:.1} s]",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn main() {
    let root = tempfile::tempdir().expect("temp dir");
    let sub = |s: &str| {
        let d = root.path().join(s);
        fs::create_dir_all(&d).expect("create dir");
        d
    };
    let mut results = Vec::new();
    let mut timed = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        results.push(report(id, name, out, t0.elapsed().as_secs_f64()));
    };

    timed(1, "prox correctness", &mut prox_correctness);
    timed(2, "gradient correctness", &mut gradient_correctness);
    timed(3, "reduction equivalences", &mut reductions);
    let mut rec: Option<Result<Manifest, String>> = None;
    timed(4, "one-step recurrence", &mut || {
        let m = recurrence_manifest(&sub("recurrence"));
        rec = Some(m.clone());
        m.and_then(|m| recurrence(&m))
    });
    timed(5, "decreasing-step rate", &mut || rate(&sub("rate")));
    timed(6, "constant-step plateau", &mut || {
        rec.clone()
            .unwrap_or_else(|| Err("recurrence run missing".into()))
            .and_then(|m| plateau(&m))
    });
    timed(7, "feasibility linear rate", &mut || {
        cfp_linear(&sub("cfp"))
    });
    timed(8, "single-sample limit", &mut deterministic_limit);
    timed(9, "atoms scaling trend", &mut || atoms(&sub("atoms")));
    timed(10, "fixed-round comparison", &mut || {
        iterations(&sub("iterations"))
    });
    timed(11, "determinism", &mut determinism);

    let passed = results.iter().filter(|b| **b).count();
    println!("acceptance: {passed} of {} criteria pass", results.len());
    let strict = std::env::var("SSPG_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
