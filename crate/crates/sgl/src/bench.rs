//! Solver race: iterations and wall-clock time for each solver to bring
//! `‖β^t − β̂‖²/p` under a set of precision targets, where `β̂` is a
//! high-precision minimizer of the same instance.

use rayon::prelude::*;

use sgl_core::solvers::solve_fista;
use sgl_core::{solve, NoClock, ProblemInstance, SolverConfig, SolverKind, ThresholdPolicy};

use crate::clock::StdClock;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const TARGETS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// Minimizer accurate to roughly machine precision: AMP with the penalty
/// calibrated at every step, then FISTA started from its output.
pub fn reference_minimizer(instance: &ProblemInstance) -> Result<Vec<f64>> {
    let amp_cfg = SolverConfig {
        max_iters: 2000,
        tol: 1e-13,
        threshold: ThresholdPolicy::FixedLambda,
        ..Default::default()
    };
    let amp = solve(SolverKind::Amp, instance, &amp_cfg, &NoClock)?;
    let init = if amp.diverged() { None } else { Some(amp.final_beta) };
    let polish = SolverConfig {
        max_iters: 50_000,
        tol: 1e-14,
        init,
        ..Default::default()
    };
    let fista = solve_fista(instance, &polish, &NoClock)?;
    if fista.diverged() {
        return Err(Error::Diverged("reference minimizer".into()));
    }
    Ok(fista.final_beta)
}

/// One solver on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceResult {
    pub rep: usize,
    pub solver: SolverKind,
    pub iters: [Option<usize>; 4],
    pub wall_ns: [Option<u64>; 4],
}

/// Runs every solver in `solvers` against a fresh reference minimizer.
/// Each solver stops once the last target is reached.
pub fn race(instance: &ProblemInstance, solvers: &[SolverKind], base: &SolverConfig, rep: usize) -> Result<Vec<RaceResult>> {
    let reference = reference_minimizer(instance)?;
    let cfg = SolverConfig {
        reference: Some(reference),
        stop_mse: Some(TARGETS[TARGETS.len() - 1]),
        init: None,
        ..base.clone()
    };
    let mut out = Vec::with_capacity(solvers.len());
    for &solver in solvers {
        let clock = StdClock::new();
        let trace = solve(solver, instance, &cfg, &clock)?;
        out.push(RaceResult {
            rep,
            solver,
            iters: TARGETS.map(|t| trace.iters_to_mse(t)),
            wall_ns: TARGETS.map(|t| trace.ns_to_mse(t)),
        });
    }
    Ok(out)
}

/// Summary over repetitions: mean iterations and time among the runs that
/// reached the target, or empty when none did.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub solver: SolverKind,
    pub target_mse: f64,
    pub iters: Option<f64>,
    pub wall_ns: Option<f64>,
}

pub fn summarize(results: &[RaceResult], solvers: &[SolverKind]) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &solver in solvers {
        for (k, &target) in TARGETS.iter().enumerate() {
            let mine: Vec<&RaceResult> = results.iter().filter(|r| r.solver == solver).collect();
            let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            rows.push(BenchRow {
                solver,
                target_mse: target,
                iters: mean(mine.iter().filter_map(|r| r.iters[k].map(|v| v as f64)).collect()),
                wall_ns: mean(mine.iter().filter_map(|r| r.wall_ns[k].map(|v| v as f64)).collect()),
            });
        }
    }
    rows
}

/// Races over `repetitions` instances (seeds `seed, seed+1, …`).
/// Repetitions run concurrently when `parallel` is set; solvers within one
/// repetition always run one after another.
pub fn run_bench(cfg: &ExperimentConfig, parallel: bool) -> Result<(Vec<RaceResult>, Vec<BenchRow>)> {
    let base = cfg.solver_config();
    let one = |rep: usize| -> Result<Vec<RaceResult>> {
        let inst = cfg.build_instance(rep as u64)?;
        race(&inst, &cfg.bench_solvers, &base, rep)
    };
    let per_rep: Vec<Vec<RaceResult>> = if parallel {
        (0..cfg.repetitions).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..cfg.repetitions).map(one).collect::<Result<_>>()?
    };
    let results: Vec<RaceResult> = per_rep.into_iter().flatten().collect();
    let rows = summarize(&results, &cfg.bench_solvers);
    Ok((results, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_averages_reached_targets() {
        let r = |rep, a, b| RaceResult {
            rep,
            solver: SolverKind::Ista,
            iters: [Some(a), b, None, None],
            wall_ns: [Some(10), None, None, None],
        };
        let rows = summarize(&[r(0, 4, Some(8)), r(1, 6, None)], &[SolverKind::Ista]);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].iters, Some(5.0));
        assert_eq!(rows[1].iters, Some(8.0));
        assert_eq!(rows[2].iters, None);
        assert_eq!(rows[0].wall_ns, Some(10.0));
    }
}
