//! Approximate message passing for the sparse group LASSO.

use alloc::vec;
use alloc::vec::Vec;

use super::{all_finite, diverged_message, relative_change, Clock, Recorder, SolverConfig, SolverTrace, ThresholdPolicy};
use crate::error::{check_len, Error, Result};
use crate::linalg::norm2;
use crate::model::{GroupPartition, ProblemInstance};
use crate::prox::{apply, check_threshold, ProxInput};

/// Average Jacobian `⟨η'(v, θ)⟩`, reusing `out` and `deriv` as scratch.
fn mean_derivative(v: &[f64], theta: f64, gamma: f64, partition: &GroupPartition, out: &mut [f64], deriv: &mut [f64]) -> f64 {
    let input = ProxInput {
        point: v,
        threshold: theta,
        gamma,
        partition,
    };
    apply(&input, out, Some(deriv)) / v.len() as f64
}

/// A threshold `θ >= 0` with `θ(1 − ⟨η'(v, θ)⟩/δ) = λ`, found by bisection.
///
/// The left side is zero at `θ = 0` and eventually grows like `θ` (the
/// average derivative vanishes once every group is killed), so a root
/// exists for every `λ >= 0`.
pub fn calibrate_threshold(v: &[f64], lambda: f64, delta: f64, gamma: f64, partition: &GroupPartition) -> Result<f64> {
    check_len("calibration point", partition.len(), v.len())?;
    check_threshold(lambda)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let mut out = vec![0.0; v.len()];
    let mut deriv = vec![0.0; v.len()];
    let mut f = |theta: f64| theta * (1.0 - mean_derivative(v, theta, gamma, partition, &mut out, &mut deriv) / delta) - lambda;
    let mut lo = 0.0;
    let mut hi = lambda.max(1e-12);
    let mut expansions = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Degenerate("threshold calibration did not bracket a root".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Penalty level that an AMP fixed point `(β, z)` with threshold `θ`
/// minimizes: `λ = θ(1 − ⟨η'(Xᵀz + β, θ)⟩/δ)`.
pub fn stationary_lambda(instance: &ProblemInstance, beta: &[f64], z: &[f64], theta: f64) -> Result<f64> {
    check_len("beta", instance.p(), beta.len())?;
    check_len("z", instance.n(), z.len())?;
    check_threshold(theta)?;
    let mut v = instance.design.tr_mul_vec(z);
    for (vi, bi) in v.iter_mut().zip(beta) {
        *vi += bi;
    }
    let p = instance.p();
    let mut out = vec![0.0; p];
    let mut deriv = vec![0.0; p];
    let avg = mean_derivative(&v, theta, instance.gamma, &instance.partition, &mut out, &mut deriv);
    Ok(theta * (1.0 - avg / instance.delta()))
}

/// Runs AMP from `β⁰ = 0`, `z⁰ = y`:
///
/// ```text
/// β^{t+1} = η(Xᵀz^t + β^t, θ_t)
/// z^{t+1} = y − Xβ^{t+1} + z^t⟨η'(Xᵀz^t + β^t, θ_t)⟩/δ
/// ```
pub fn solve_amp(instance: &ProblemInstance, config: &SolverConfig, clock: &dyn Clock) -> Result<SolverTrace> {
    config.validate(instance.p())?;
    let (n, p) = (instance.n(), instance.p());
    let delta = instance.delta();
    let sqrt_n = libm::sqrt(n as f64);
    let mut rec = Recorder::new(instance, config, clock);

    let mut beta = vec![0.0; p];
    let mut z = instance.response.clone();
    rec.record(0, instance.cost_from_residual(&beta, &z), &beta);

    let mut v = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut deriv = vec![0.0; p];
    let mut fit = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut thresholds = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    let mut diagnostic = None;
    for t in 0..config.max_iters {
        iters = t + 1;
        instance.design.tr_mul_vec_into(&z, &mut v);
        for (vi, bi) in v.iter_mut().zip(&beta) {
            *vi += bi;
        }
        let theta = match &config.threshold {
            ThresholdPolicy::SeDriven { alpha, tau_schedule } => {
                alpha * tau_schedule[t.min(tau_schedule.len() - 1)]
            }
            ThresholdPolicy::EmpiricalTau { alpha } => alpha * norm2(&z) / sqrt_n,
            ThresholdPolicy::FixedLambda => {
                calibrate_threshold(&v, instance.lambda, delta, instance.gamma, &instance.partition)?
            }
        };
        if !theta.is_finite() {
            diagnostic = Some(diverged_message(iters));
            break;
        }
        thresholds.push(theta);
        let input = ProxInput {
            point: &v,
            threshold: theta,
            gamma: instance.gamma,
            partition: &instance.partition,
        };
        let mut onsager = apply(&input, &mut next, Some(&mut deriv)) / p as f64 / delta;
        if matches!(config.threshold, ThresholdPolicy::FixedLambda) && theta > 0.0 {
            // Equal to ⟨η'⟩/δ when the calibration is exact. Where ⟨η'⟩ jumps
            // (a coordinate sits on its threshold) this picks the value between
            // the one-sided limits that keeps θ(1 − b) = λ, so any fixed point
            // satisfies Xᵀ(y − Xβ) ∈ λ·∂penalty(β).
            onsager = 1.0 - instance.lambda / theta;
        }
        instance.design.mul_vec_into(&next, &mut fit);
        for i in 0..n {
            resid[i] = instance.response[i] - fit[i];
            z[i] = resid[i] + onsager * z[i];
        }
        let cost = instance.cost_from_residual(&next, &resid);
        if !all_finite(&next) || !all_finite(&z) || !cost.is_finite() {
            diagnostic = Some(diverged_message(iters));
            break;
        }
        let change = relative_change(&next, &beta);
        core::mem::swap(&mut beta, &mut next);
        let hit = rec.record(iters, cost, &beta);
        if change < config.tol || hit {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(beta, converged, iters, diagnostic);
    trace.thresholds = thresholds;
    trace.final_z = Some(z);
    Ok(trace)
}
