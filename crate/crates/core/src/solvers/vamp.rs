//! Damped vector AMP: alternates a ridge solve with the SGL denoiser.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{all_finite, diverged_message, relative_change, Clock, Recorder, SolverConfig, SolverTrace};
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{axpy, dot, Matrix};
use crate::model::ProblemInstance;
use crate::prox::{apply, ProxInput};

/// Solves `(XᵀX + ρI)β = b` for any `ρ > 0` from one eigendecomposition of
/// the smaller Gram matrix. With `XᵀX = V diag(s²) Vᵀ` on its range,
///
/// ```text
/// (XᵀX + ρI)⁻¹ b = V diag(1/(s² + ρ)) Vᵀ b + (b − V Vᵀ b)/ρ
/// ```
#[derive(Debug, Clone)]
pub struct RidgeSolver {
    p: usize,
    /// Right singular vectors, one per row.
    basis: Vec<Vec<f64>>,
    eig: Vec<f64>,
}

impl RidgeSolver {
    pub fn new(x: &Matrix) -> Result<Self> {
        let (n, p) = (x.rows(), x.cols());
        let gram = x.small_gram();
        let m = gram.rows();
        let dec = SymmetricEigen::new(DMatrix::from_row_slice(m, m, gram.as_slice()));
        let top = dec.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
        let cutoff = 1e-12 * top.max(f64::MIN_POSITIVE);
        let mut basis = Vec::new();
        let mut eig = Vec::new();
        for k in 0..m {
            let lam = dec.eigenvalues[k];
            let vec_k = dec.eigenvectors.column(k);
            if n > p {
                // the Gram is XᵀX itself
                basis.push(vec_k.iter().copied().collect());
                eig.push(lam.max(0.0));
            } else if lam > cutoff {
                // right singular vector Xᵀu/s
                let u: Vec<f64> = vec_k.iter().copied().collect();
                let mut v = x.tr_mul_vec(&u);
                let s = libm::sqrt(lam);
                v.iter_mut().for_each(|e| *e /= s);
                basis.push(v);
                eig.push(lam);
            }
        }
        Ok(Self { p, basis, eig })
    }

    pub fn solve(&self, rho: f64, b: &[f64]) -> Result<Vec<f64>> {
        check_len("ridge right-hand side", self.p, b.len())?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid("rho", "must be positive and finite"));
        }
        let mut out: Vec<f64> = b.iter().map(|v| v / rho).collect();
        for (v, &lam) in self.basis.iter().zip(&self.eig) {
            let c = dot(v, b) * (1.0 / (lam + rho) - 1.0 / rho);
            axpy(c, v, &mut out);
        }
        Ok(out)
    }

    /// `tr((XᵀX + ρI)⁻¹)`
    pub fn trace_inverse(&self, rho: f64) -> f64 {
        let on_range: f64 = self.eig.iter().map(|&lam| 1.0 / (lam + rho)).sum();
        on_range + (self.p - self.eig.len()) as f64 / rho
    }
}

/// Runs damped VAMP from `u⁰ = 0`, `ρ⁰ = 1`:
///
/// ```text
/// β  = (XᵀX + ρI)⁻¹(Xᵀy + u),   σ_β = tr((XᵀX + ρI)⁻¹)/p
/// r  = (β − σ_β u)/(1 − σ_β ρ)
/// z  = η(r, λσ_β/(1 − σ_β ρ)),  σ_z = σ_β⟨η'⟩/(1 − σ_β ρ)
/// u ← u + (1−𝒟)(z/σ_z − β/σ_β),  ρ ← ρ + (1−𝒟)(1/σ_z − 1/σ_β)
/// ```
///
/// The reported iterate is the denoised `z`; the run stops once both `z`
/// and the ridge estimate `β` settle.
pub fn solve_vamp(instance: &ProblemInstance, config: &SolverConfig, clock: &dyn Clock) -> Result<SolverTrace> {
    config.validate(instance.p())?;
    let p = instance.p();
    let pf = p as f64;
    let keep = 1.0 - config.damping;
    let ridge = RidgeSolver::new(&instance.design)?;
    let xty = instance.design.tr_mul_vec(&instance.response);
    let mut rec = Recorder::new(instance, config, clock);

    let mut u = vec![0.0; p];
    let mut rho = 1.0;
    let mut z = vec![0.0; p];
    rec.record(0, instance.cost_from_residual(&z, &instance.response), &z);

    let mut rhs = vec![0.0; p];
    let mut r1 = vec![0.0; p];
    let mut next = vec![0.0; p];
    let mut deriv = vec![0.0; p];
    let mut prev_ridge = vec![0.0; p];
    let mut thresholds = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    let mut diagnostic = None;
    for t in 1..=config.max_iters {
        iters = t;
        for j in 0..p {
            rhs[j] = xty[j] + u[j];
        }
        let beta = ridge.solve(rho, &rhs)?;
        let sigma_b = ridge.trace_inverse(rho) / pf;
        let denom = 1.0 - sigma_b * rho;
        if !(denom > 1e-12) {
            return Err(Error::Degenerate(
                alloc::format!("1 - sigma_beta*rho = {denom:e} at iteration {t}"),
            ));
        }
        for j in 0..p {
            r1[j] = (beta[j] - sigma_b * u[j]) / denom;
        }
        let theta = instance.lambda * sigma_b / denom;
        thresholds.push(theta);
        let input = ProxInput {
            point: &r1,
            threshold: theta,
            gamma: instance.gamma,
            partition: &instance.partition,
        };
        // a fully killed estimate has zero divergence; keep σ_z positive
        let avg = (apply(&input, &mut next, Some(&mut deriv)) / pf).max(1e-9);
        let sigma_z = sigma_b * avg / denom;
        for j in 0..p {
            u[j] += keep * (next[j] / sigma_z - beta[j] / sigma_b);
        }
        rho += keep * (1.0 / sigma_z - 1.0 / sigma_b);
        if !(rho > 0.0) {
            // precision must stay positive for the ridge step
            rho = f64::EPSILON;
        }

        let cost = instance.cost(&next)?;
        if !all_finite(&next) || !all_finite(&u) || !rho.is_finite() || !cost.is_finite() {
            diagnostic = Some(diverged_message(t));
            break;
        }
        let change = relative_change(&next, &z).max(relative_change(&beta, &prev_ridge));
        prev_ridge = beta;
        core::mem::swap(&mut z, &mut next);
        let hit = rec.record(t, cost, &z);
        if change < config.tol || hit {
            converged = true;
            break;
        }
    }
    let mut trace = rec.finish(z, converged, iters, diagnostic);
    trace.thresholds = thresholds;
    Ok(trace)
}
