//! Blockwise descent: one proximal gradient step per group, cycling over
//! groups, with a closed-form test for killing a whole group.

use alloc::vec;
use alloc::vec::Vec;

use super::{all_finite, diverged_message, relative_change, step_size, Clock, Recorder, SolverConfig, SolverTrace};
use crate::error::Result;
use crate::model::ProblemInstance;
use crate::prox::soft_threshold;

pub fn solve_blockwise(instance: &ProblemInstance, config: &SolverConfig, clock: &dyn Clock) -> Result<SolverTrace> {
    config.validate(instance.p())?;
    let (n, p) = (instance.n(), instance.p());
    let (lambda, gamma) = (instance.lambda, instance.gamma);
    let x = &instance.design;
    let part = &instance.partition;
    let steps: Vec<f64> = part
        .groups()
        .map(|idx| step_size(x, Some(idx), config))
        .collect::<Result<_>>()?;
    let mut rec = Recorder::new(instance, config, clock);

    let mut beta = config.init.clone().unwrap_or_else(|| vec![0.0; p]);
    // full residual y − Xβ, kept current as blocks change
    let mut r = instance.residual(&beta);
    rec.record(0, instance.cost_from_residual(&beta, &r), &beta);

    let max_size = part.sizes().iter().copied().max().unwrap_or(0);
    let mut partial = vec![0.0; n];
    let mut fit_l = vec![0.0; n];
    let mut g = vec![0.0; max_size];
    let mut h = vec![0.0; max_size];
    let mut block = vec![0.0; max_size];
    let mut prev = beta.clone();
    let mut converged = false;
    let mut iters = 0;
    let mut diagnostic = None;
    for t in 1..=config.max_iters {
        iters = t;
        prev.copy_from_slice(&beta);
        for (l, idx) in part.groups().enumerate() {
            let k = idx.len();
            let b_l: Vec<f64> = idx.iter().map(|&j| beta[j]).collect();
            // r_(−l) = y − Σ_{k≠l} X_k β_k
            x.mul_cols_into(idx, &b_l, &mut fit_l);
            for i in 0..n {
                partial[i] = r[i] + fit_l[i];
            }
            x.tr_mul_cols_into(idx, &partial, &mut g[..k]);
            let excess: f64 = g[..k].iter().map(|&v| soft_threshold(v, gamma * lambda).powi(2)).sum();
            let group_thr = (1.0 - gamma) * lambda * part.weights()[l];
            if libm::sqrt(excess) <= group_thr {
                block[..k].fill(0.0);
            } else {
                // θ = β_l − s·X_lᵀ(X_lβ_l − r_(−l)) = β_l + s·(g − X_lᵀX_lβ_l)
                let s = steps[l];
                x.tr_mul_cols_into(idx, &fit_l, &mut h[..k]);
                let mut nsq = 0.0;
                for a in 0..k {
                    let theta = b_l[a] + s * (g[a] - h[a]);
                    let u = soft_threshold(theta, s * gamma * lambda);
                    block[a] = u;
                    nsq += u * u;
                }
                let norm = libm::sqrt(nsq);
                let shrink = if norm > 0.0 { (1.0 - s * group_thr / norm).max(0.0) } else { 0.0 };
                block[..k].iter_mut().for_each(|v| *v *= shrink);
            }
            // r = r_(−l) − X_l β_l^new
            x.mul_cols_into(idx, &block[..k], &mut fit_l);
            for i in 0..n {
                r[i] = partial[i] - fit_l[i];
            }
            for (a, &j) in idx.iter().enumerate() {
                beta[j] = block[a];
            }
        }
        let cost = instance.cost_from_residual(&beta, &r);
        if !all_finite(&beta) || !cost.is_finite() {
            diagnostic = Some(diverged_message(t));
            break;
        }
        let change = relative_change(&beta, &prev);
        let hit = rec.record(t, cost, &beta);
        if change < config.tol || hit {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(beta, converged, iters, diagnostic);
    if let [only] = steps.as_slice() {
        trace.step_size = Some(*only);
    }
    Ok(trace)
}
