//! Proximal gradient descent (ISTA) and its accelerated variant (FISTA).

use alloc::vec;
use alloc::vec::Vec;

use super::{all_finite, diverged_message, relative_change, step_size, Clock, Recorder, SolverConfig, SolverTrace};
use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::model::ProblemInstance;
use crate::prox::{apply, ProxInput};

/// FISTA momentum recursion `d_{t+1} = (1 + √(1 + 4d_t²))/2`.
pub fn next_momentum(d: f64) -> f64 {
    0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * d * d))
}

/// `out = y − X·beta`, with `X·beta` kept in `fit`.
fn residual_into(instance: &ProblemInstance, beta: &[f64], fit: &mut [f64], out: &mut [f64]) {
    instance.design.mul_vec_into(beta, fit);
    for ((o, f), y) in out.iter_mut().zip(fit.iter()).zip(&instance.response) {
        *o = y - f;
    }
}

fn start(instance: &ProblemInstance, config: &SolverConfig) -> Vec<f64> {
    config.init.clone().unwrap_or_else(|| vec![0.0; instance.p()])
}

pub fn solve_ista(instance: &ProblemInstance, config: &SolverConfig, clock: &dyn Clock) -> Result<SolverTrace> {
    config.validate(instance.p())?;
    let (n, p) = (instance.n(), instance.p());
    let s = step_size(&instance.design, None, config)?;
    let mut rec = Recorder::new(instance, config, clock);

    let mut beta = start(instance, config);
    let mut fit = vec![0.0; n];
    let mut r = vec![0.0; n];
    residual_into(instance, &beta, &mut fit, &mut r);
    let mut cost = instance.cost_from_residual(&beta, &r);
    rec.record(0, cost, &beta);

    let mut grad = vec![0.0; p];
    let mut v = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut converged = false;
    let mut iters = 0;
    let mut diagnostic = None;
    for t in 1..=config.max_iters {
        iters = t;
        instance.design.tr_mul_vec_into(&r, &mut grad);
        for ((vi, bi), gi) in v.iter_mut().zip(&beta).zip(&grad) {
            *vi = bi + s * gi;
        }
        let input = ProxInput {
            point: &v,
            threshold: s * instance.lambda,
            gamma: instance.gamma,
            partition: &instance.partition,
        };
        apply(&input, &mut next, None);
        residual_into(instance, &next, &mut fit, &mut r);
        let new_cost = instance.cost_from_residual(&next, &r);
        if !all_finite(&next) || !new_cost.is_finite() {
            diagnostic = Some(diverged_message(t));
            break;
        }
        // ISTA is monotone for any step below 1/L
        let increase = new_cost - cost;
        if increase > 1e-9 * cost.abs().max(1.0) {
            return Err(Error::StepTooLarge {
                iter: t,
                increase,
                suggested: 0.5 * s,
            });
        }
        let change = relative_change(&next, &beta);
        core::mem::swap(&mut beta, &mut next);
        cost = new_cost;
        let hit = rec.record(t, cost, &beta);
        if change < config.tol || hit {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(beta, converged, iters, diagnostic);
    trace.step_size = Some(s);
    Ok(trace)
}

pub fn solve_fista(instance: &ProblemInstance, config: &SolverConfig, clock: &dyn Clock) -> Result<SolverTrace> {
    config.validate(instance.p())?;
    let (n, p) = (instance.n(), instance.p());
    let s = step_size(&instance.design, None, config)?;
    let mut rec = Recorder::new(instance, config, clock);

    let mut beta = start(instance, config);
    // momentum point M and X·M
    let mut m = beta.clone();
    let mut fit = vec![0.0; n];
    let mut r = vec![0.0; n];
    residual_into(instance, &beta, &mut fit, &mut r);
    rec.record(0, instance.cost_from_residual(&beta, &r), &beta);
    let mut fit_m = fit.clone();
    let mut r_m = r.clone();

    let mut d = 1.0;
    let mut grad = vec![0.0; p];
    let mut v = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut fit_next = vec![0.0; n];
    let mut converged = false;
    let mut iters = 0;
    let mut diagnostic = None;
    for t in 1..=config.max_iters {
        iters = t;
        instance.design.tr_mul_vec_into(&r_m, &mut grad);
        for ((vi, mi), gi) in v.iter_mut().zip(&m).zip(&grad) {
            *vi = mi + s * gi;
        }
        let input = ProxInput {
            point: &v,
            threshold: s * instance.lambda,
            gamma: instance.gamma,
            partition: &instance.partition,
        };
        apply(&input, &mut next, None);
        residual_into(instance, &next, &mut fit_next, &mut r);
        let new_cost = instance.cost_from_residual(&next, &r);
        if !all_finite(&next) || !new_cost.is_finite() {
            diagnostic = Some(diverged_message(t));
            break;
        }
        // FISTA is not monotone, so the step is checked against the quadratic
        // upper bound of the smooth part around M instead.
        let f_m = 0.5 * norm_sq(&r_m);
        let f_next = 0.5 * norm_sq(&r);
        let mut lin = 0.0;
        let mut quad = 0.0;
        for j in 0..p {
            let dj = next[j] - m[j];
            lin -= grad[j] * dj;
            quad += dj * dj;
        }
        let excess = f_next - (f_m + lin + quad / (2.0 * s));
        if excess > 1e-9 * f_m.max(1.0) {
            return Err(Error::StepTooLarge {
                iter: t,
                increase: excess,
                suggested: 0.5 * s,
            });
        }

        let d_next = next_momentum(d);
        let c = (d - 1.0) / d_next;
        for j in 0..p {
            m[j] = next[j] + c * (next[j] - beta[j]);
        }
        for i in 0..n {
            fit_m[i] = fit_next[i] + c * (fit_next[i] - fit[i]);
            r_m[i] = instance.response[i] - fit_m[i];
        }
        d = d_next;
        let change = relative_change(&next, &beta);
        core::mem::swap(&mut beta, &mut next);
        core::mem::swap(&mut fit, &mut fit_next);
        let hit = rec.record(t, new_cost, &beta);
        if change < config.tol || hit {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(beta, converged, iters, diagnostic);
    trace.step_size = Some(s);
    Ok(trace)
}
