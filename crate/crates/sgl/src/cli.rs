//! The `sgl` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sgl_core::analysis::{predict_path, solve_minimizer, sweep_path_with, PathRow};
use sgl_core::{
    qq_compare, solve, Metrics, PathResult, SEEngine, SEOutcome, SolverKind, ThresholdPolicy,
};

use crate::bench::run_bench;
use crate::clock::StdClock;
use crate::config::{ExperimentConfig, ThresholdKey};
use crate::error::{Error, Result};
use crate::export;
use crate::format::{save_instance, write_text, write_vector, BundleMeta};

pub const RESOLVED_CONFIG: &str = "resolved.cfg";

#[derive(Debug, Parser)]
#[command(name = "sgl", version, about = "Sparse group LASSO solvers and state-evolution tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an instance bundle.
    Gen {
        #[command(flatten)]
        common: Common,
    },
    /// Run one solver and write its trace.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solver: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Instance bundle directory to load instead of generating.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// State-evolution fixed point and predictions at `alpha`.
    Se {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Map alpha to lambda, or lambda to alpha with `--lambda`.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "lambda")]
        alpha: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Sweep a lambda grid, comparing empirical and predicted metrics.
    Path {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        solver: Option<String>,
    },
    /// Iterations and time for each solver to reach the precision targets.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Run repetitions concurrently.
        #[arg(long)]
        parallel_seeds: bool,
    },
    /// Quantiles of the estimate against the state-evolution prediction.
    Qq {
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve(common: &Common, extra: Vec<String>) -> Result<Option<ExperimentConfig>> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let mut overrides = common.set.clone();
    if let Some(dir) = &common.output_dir {
        overrides.push(format!("output_dir={}", dir.display()));
    }
    overrides.extend(extra);
    cfg.apply_overrides(&overrides)?;
    if common.dry_run {
        print!("{}", cfg.to_text());
        return Ok(None);
    }
    write_text(&cfg.output_dir.join(RESOLVED_CONFIG), &cfg.to_text())?;
    Ok(Some(cfg))
}

fn flag<T: ToString>(key: &str, v: &Option<T>) -> Option<String> {
    v.as_ref().map(|v| format!("{key}={}", v.to_string()))
}

fn out(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.output_dir.join(name)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Gen { common } => {
            let Some(cfg) = resolve(&common, vec![])? else { return Ok(()) };
            let inst = cfg.build_instance(0)?;
            let meta = BundleMeta {
                lambda: cfg.lambda,
                gamma: cfg.gamma,
                sigma_w: cfg.sigma_w,
                seed: cfg.seed,
            };
            save_instance(&cfg.output_dir, &inst, &meta)?;
            println!("wrote instance n={} p={} to {}", inst.n(), inst.p(), cfg.output_dir.display());
            Ok(())
        }
        Command::Solve { common, solver, lambda, instance } => {
            let extra = [
                flag("solver", &solver),
                flag("lambda", &lambda),
                instance.as_ref().map(|p| format!("instance={}", p.display())),
            ];
            let Some(cfg) = resolve(&common, extra.into_iter().flatten().collect())? else { return Ok(()) };
            cmd_solve(&cfg)
        }
        Command::Se { common, alpha } => {
            let Some(cfg) = resolve(&common, flag("alpha", &alpha).into_iter().collect())? else { return Ok(()) };
            let engine = SEEngine::new(&cfg.se_params()?)?;
            let o = engine.predict(cfg.alpha)?;
            write_outcome(&cfg, &o)?;
            print!("{}", export::se_outcome_text(&o));
            Ok(())
        }
        Command::Calibrate { common, alpha, lambda } => {
            let extra = [flag("alpha", &alpha), flag("lambda", &lambda)];
            let Some(cfg) = resolve(&common, extra.into_iter().flatten().collect())? else { return Ok(()) };
            let engine = SEEngine::new(&cfg.se_params()?)?;
            let a = if lambda.is_some() { engine.alpha_of_lambda(cfg.lambda)? } else { cfg.alpha };
            let o = engine.predict(a)?;
            write_outcome(&cfg, &o)?;
            println!("alpha={}\nlambda={}", o.alpha, o.lambda);
            Ok(())
        }
        Command::Path { common, solver } => {
            let Some(cfg) = resolve(&common, flag("solver", &solver).into_iter().collect())? else { return Ok(()) };
            cmd_path(&cfg)
        }
        Command::Bench { common, parallel_seeds } => {
            let Some(cfg) = resolve(&common, vec![])? else { return Ok(()) };
            let (_, rows) = run_bench(&cfg, parallel_seeds)?;
            let csv = export::bench_csv(&rows);
            write_text(&out(&cfg, "bench.csv"), &csv)?;
            print!("{csv}");
            Ok(())
        }
        Command::Qq { common } => {
            let Some(cfg) = resolve(&common, vec![])? else { return Ok(()) };
            cmd_qq(&cfg)
        }
    }
}

fn write_outcome(cfg: &ExperimentConfig, o: &SEOutcome) -> Result<()> {
    write_text(&out(cfg, "se.txt"), &export::se_outcome_text(o))?;
    write_text(&out(cfg, "tau_schedule.csv"), &export::tau_schedule_csv(&o.tau_schedule))
}

fn cmd_solve(cfg: &ExperimentConfig) -> Result<()> {
    let inst = cfg.build_instance(0)?;
    let mut scfg = cfg.solver_config();
    if cfg.solver == SolverKind::Amp && cfg.threshold == ThresholdKey::SeDriven {
        let fp = SEEngine::new(&cfg.se_params()?)?.fixed_point(cfg.alpha)?;
        scfg.threshold = ThresholdPolicy::SeDriven {
            alpha: cfg.alpha,
            tau_schedule: fp.tau_schedule,
        };
    }
    let clock = StdClock::new();
    let trace = solve(cfg.solver, &inst, &scfg, &clock)?;
    write_text(&out(cfg, "trace.csv"), &export::trace_csv(&trace))?;
    write_vector(&out(cfg, "beta.vec"), &trace.final_beta)?;
    if let Some(d) = &trace.diagnostic {
        return Err(Error::Diverged(d.clone()));
    }
    let nnz = trace.final_beta.iter().filter(|v| **v != 0.0).count();
    println!(
        "solver={} iters={} converged={} cost={} nonzeros={}",
        cfg.solver,
        trace.iters_used,
        trace.converged,
        trace.final_cost(),
        nnz
    );
    Ok(())
}

fn cmd_path(cfg: &ExperimentConfig) -> Result<()> {
    let lambdas = cfg.lambdas();
    let engine = SEEngine::new(&cfg.se_params()?)?;
    let predictions = predict_path(&lambdas, &engine)?;
    let scfg = cfg.solver_config();
    let clock = StdClock::new();
    let mut runs = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let inst = cfg.build_instance(rep as u64)?;
        runs.push(sweep_path_with(&inst, &lambdas, cfg.solver, &scfg, &predictions, &clock)?);
    }
    let path = average_paths(&runs);
    let csv = export::path_csv(&path);
    write_text(&out(cfg, "path.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

/// Mean of the empirical columns over repetitions; `n_selected` is rounded.
fn average_paths(runs: &[PathResult]) -> PathResult {
    if runs.len() == 1 {
        return runs[0].clone();
    }
    let k = runs.len() as f64;
    let rows = (0..runs[0].rows.len())
        .map(|i| {
            let at = |f: &dyn Fn(&PathRow) -> f64| runs.iter().map(|r| f(&r.rows[i])).sum::<f64>() / k;
            let tpps: Vec<f64> = runs.iter().filter_map(|r| r.rows[i].empirical.tpp).collect();
            let first = &runs[0].rows[i];
            PathRow {
                lambda: first.lambda,
                empirical: Metrics {
                    mse: at(&|r| r.empirical.mse),
                    tpp: (!tpps.is_empty()).then(|| tpps.iter().sum::<f64>() / tpps.len() as f64),
                    fdp: at(&|r| r.empirical.fdp),
                    n_selected: at(&|r| r.empirical.n_selected as f64).round() as usize,
                },
                predicted: first.predicted.clone(),
                converged: runs.iter().all(|r| r.rows[i].converged),
            }
        })
        .collect();
    PathResult {
        lambdas: runs[0].lambdas.clone(),
        rows,
    }
}

fn cmd_qq(cfg: &ExperimentConfig) -> Result<()> {
    let params = cfg.se_params()?;
    let engine = SEEngine::new(&params)?;
    let alpha = engine.alpha_of_lambda(cfg.lambda)?;
    let o = engine.predict(alpha)?;
    let inst = cfg.build_instance(0)?;
    let trace = solve_minimizer(cfg.solver, &inst, &cfg.solver_config(), &StdClock::new())?;
    let rows = qq_compare(&trace.final_beta, &o, &params, cfg.seed)?;
    let gap = rows.iter().map(|r| (r.empirical_q - r.predicted_q).abs()).fold(0.0, f64::max);
    write_text(&out(cfg, "qq.csv"), &export::qq_csv(&rows))?;
    println!("alpha={alpha} max_quantile_gap={gap}");
    Ok(())
}

/// Convenience for callers that already hold a directory.
pub fn resolved_config_path(dir: &Path) -> PathBuf {
    dir.join(RESOLVED_CONFIG)
}
