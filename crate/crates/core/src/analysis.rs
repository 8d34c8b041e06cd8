//! Empirical statistics of estimates, penalty-path sweeps and the
//! comparison of empirical quantities with state-evolution predictions.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, invalid, Error, Result};
use crate::model::{GroupPartition, ProblemInstance};
use crate::prox::{apply, ProxInput};
use crate::random::{self, ids};
use crate::solvers::{solve, solve_fista, Clock, SolverConfig, SolverKind, SolverTrace, ThresholdPolicy};
use crate::state_evolution::{SEEngine, SEOutcome, SEParams};

/// Entries with magnitude at or below this count as zero.
pub const ZERO_TOL: f64 = 1e-10;

fn selected(v: f64) -> bool {
    libm::fabs(v) > ZERO_TOL
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `‖β̂ − β₀‖²/p`.
    pub mse: f64,
    /// True discoveries over true signals; `None` when `β₀ = 0`.
    pub tpp: Option<f64>,
    /// False discoveries over discoveries, 0 when nothing is selected.
    pub fdp: f64,
    pub n_selected: usize,
}

pub fn empirical_metrics(beta_hat: &[f64], beta0: &[f64]) -> Result<Metrics> {
    check_len("beta0", beta_hat.len(), beta0.len())?;
    if beta_hat.is_empty() {
        return Err(invalid("beta_hat", "must be nonempty"));
    }
    let (mut sq, mut n_sel, mut true_sel, mut n_true) = (0.0, 0usize, 0usize, 0usize);
    for (&b, &t) in beta_hat.iter().zip(beta0) {
        sq += (b - t) * (b - t);
        let s = selected(b);
        n_sel += s as usize;
        if t != 0.0 {
            n_true += 1;
            true_sel += s as usize;
        }
    }
    Ok(Metrics {
        mse: sq / beta_hat.len() as f64,
        tpp: (n_true > 0).then(|| true_sel as f64 / n_true as f64),
        fdp: if n_sel == 0 { 0.0 } else { (n_sel - true_sel) as f64 / n_sel as f64 },
        n_selected: n_sel,
    })
}

/// Solves for the cost minimizer with the chosen solver. AMP runs with the
/// `FixedLambda` policy; if it does not settle (it can cycle when a target
/// `λ` falls between two group-kill events), FISTA finishes from its last
/// iterate.
pub fn solve_minimizer(kind: SolverKind, instance: &ProblemInstance, config: &SolverConfig, clock: &dyn Clock) -> Result<SolverTrace> {
    if kind != SolverKind::Amp {
        return solve(kind, instance, config, clock);
    }
    let amp_cfg = SolverConfig {
        threshold: ThresholdPolicy::FixedLambda,
        ..config.clone()
    };
    let amp = solve(SolverKind::Amp, instance, &amp_cfg, clock)?;
    if amp.converged {
        return Ok(amp);
    }
    let polish = SolverConfig {
        init: Some(amp.final_beta.clone()),
        ..config.clone()
    };
    let mut trace = solve_fista(instance, &polish, clock)?;
    trace.diagnostic = Some(alloc::format!(
        "AMP did not converge in {} iterations; finished with FISTA",
        amp.iters_used
    ));
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub lambda: f64,
    pub empirical: Metrics,
    /// State-evolution prediction; `None` when `λ` is beyond `λ_max`.
    pub predicted: Option<SEOutcome>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub rows: Vec<PathRow>,
}

fn check_grid(lambdas: &[f64]) -> Result<()> {
    if lambdas.is_empty() {
        return Err(invalid("lambda_grid", "must be nonempty"));
    }
    if lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(invalid("lambda_grid", "entries must be finite and nonnegative"));
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("lambda_grid", "must be strictly increasing"));
    }
    Ok(())
}

/// State-evolution predictions along a grid; out-of-range penalties give
/// `None`. Predictions do not depend on the instance, so one call serves
/// every seed.
pub fn predict_path(lambdas: &[f64], engine: &SEEngine) -> Result<Vec<Option<SEOutcome>>> {
    check_grid(lambdas)?;
    lambdas
        .iter()
        .map(|&lambda| match engine.alpha_of_lambda(lambda) {
            Ok(alpha) => engine.predict(alpha).map(Some),
            Err(Error::LambdaOutOfRange { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Solves afresh at every grid point (no warm starts) and pairs the
/// empirical metrics with precomputed predictions.
pub fn sweep_path_with(
    instance: &ProblemInstance,
    lambdas: &[f64],
    kind: SolverKind,
    config: &SolverConfig,
    predictions: &[Option<SEOutcome>],
    clock: &dyn Clock,
) -> Result<PathResult> {
    check_grid(lambdas)?;
    check_len("predictions", lambdas.len(), predictions.len())?;
    let truth = instance
        .truth
        .as_ref()
        .ok_or_else(|| invalid("instance", "path sweeps need the true signal"))?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for (&lambda, pred) in lambdas.iter().zip(predictions) {
        let inst = instance.with_lambda(lambda)?;
        let trace = solve_minimizer(kind, &inst, config, clock)?;
        rows.push(PathRow {
            lambda,
            empirical: empirical_metrics(&trace.final_beta, &truth.beta0)?,
            predicted: pred.clone(),
            converged: trace.converged,
        });
    }
    Ok(PathResult {
        lambdas: lambdas.to_vec(),
        rows,
    })
}

pub fn sweep_path(
    instance: &ProblemInstance,
    lambdas: &[f64],
    kind: SolverKind,
    config: &SolverConfig,
    params: &SEParams,
    clock: &dyn Clock,
) -> Result<PathResult> {
    let engine = SEEngine::new(params)?;
    let predictions = predict_path(lambdas, &engine)?;
    sweep_path_with(instance, lambdas, kind, config, &predictions, clock)
}

/// Type-7 sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QqRow {
    pub prob: f64,
    pub empirical_q: f64,
    pub predicted_q: f64,
}

/// Pairs the percentiles 1%..99% of `β̂` with those of `η(Π + τ*Z, ατ*)`.
///
/// The reference sample is drawn with the group layout of `params` at the
/// length of `β̂`, replicated until it holds at least `params.mc_samples`
/// entries.
pub fn qq_compare(beta_hat: &[f64], se: &SEOutcome, params: &SEParams, seed: u64) -> Result<Vec<QqRow>> {
    params.validate()?;
    let p = beta_hat.len();
    if p < params.group_ratios.len() {
        return Err(invalid("beta_hat", "shorter than the number of groups"));
    }
    let sized = SEParams { p_mc: p, ..params.clone() };
    let sizes = sized.mc_group_sizes();
    let partition = GroupPartition::contiguous(&sizes)?;
    let reps = sized.replicates();
    let tau = se.tau_star;
    let mut sample = Vec::with_capacity(reps * p);
    let mut point = vec![0.0; p];
    let mut out = vec![0.0; p];
    for r in 0..reps as u64 {
        let mut rng = random::stream(seed, ids::QQ + 256 * r);
        let mut j = 0;
        for (l, &size) in sizes.iter().enumerate() {
            let law = match &params.group_signals {
                Some(sig) => sig[l],
                None => params.prior.signal,
            };
            for _ in 0..size {
                let z: f64 = StandardNormal.sample(&mut rng);
                point[j] = law.sample(&mut rng) + tau * z;
                j += 1;
            }
        }
        let input = ProxInput {
            point: &point,
            threshold: se.alpha * tau,
            gamma: params.gamma,
            partition: &partition,
        };
        apply(&input, &mut out, None);
        sample.extend_from_slice(&out);
    }
    let mut emp = beta_hat.to_vec();
    emp.sort_by(f64::total_cmp);
    sample.sort_by(f64::total_cmp);
    Ok((1..=99)
        .map(|k| {
            let prob = k as f64 / 100.0;
            QqRow {
                prob,
                empirical_q: quantile_sorted(&emp, prob),
                predicted_q: quantile_sorted(&sample, prob),
            }
        })
        .collect())
}
