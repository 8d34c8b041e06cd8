//! Iterative solvers for the sparse group LASSO cost. All of them share
//! the proximal kernel in [`crate::prox`] and report a [`SolverTrace`].

mod amp;
mod blockwise;
mod proximal;
mod vamp;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use amp::{calibrate_threshold, solve_amp, stationary_lambda};
pub use blockwise::solve_blockwise;
pub use proximal::{next_momentum, solve_fista, solve_ista};
pub use vamp::{solve_vamp, RidgeSolver};

use crate::error::{invalid, Result};
use crate::linalg::{dist_sq, norm_sq, spectral_norm_sq, Matrix};
use crate::model::ProblemInstance;

/// Monotonic nanosecond clock. The core crate has no notion of time; the
/// `sgl` crate supplies a real one.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// Clock that always reads zero, so `elapsed_ns` is zero everywhere.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

/// How AMP chooses its threshold `θ_t`.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdPolicy {
    /// `θ_t = α·τ_t` from a state-evolution schedule (`τ_t`, not squared);
    /// the last entry is reused once the schedule runs out.
    SeDriven { alpha: f64, tau_schedule: Vec<f64> },
    /// `θ_t = α·‖z^t‖₂/√n`.
    EmpiricalTau { alpha: f64 },
    /// `θ_t` solves `λ = θ(1 − ⟨η'(Xᵀz^t + β^t, θ)⟩/δ)` at every step, so a
    /// fixed point minimizes the cost at the instance's `λ`.
    FixedLambda,
}

/// Step-size rule for ISTA, FISTA and blockwise descent when no explicit
/// step is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `0.95/‖X‖₂²`, with `‖X‖₂²` from 30 power-iteration steps.
    Spectral,
    /// `scale/‖XᵀX‖_F`.
    FrobeniusGram { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once `‖β^{t+1} − β^t‖/max(1, ‖β^t‖) < tol`.
    pub tol: f64,
    pub threshold: ThresholdPolicy,
    pub step_size: Option<f64>,
    pub step_rule: StepRule,
    /// VAMP damping `𝒟 ∈ [0, 1)`.
    pub damping: f64,
    /// Vector `opt_mse` is measured against; defaults to the instance truth.
    pub reference: Option<Vec<f64>>,
    /// Also stop once `opt_mse` drops below this value.
    pub stop_mse: Option<f64>,
    /// Starting point for ISTA/FISTA/blockwise (zero otherwise).
    pub init: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-8,
            threshold: ThresholdPolicy::FixedLambda,
            step_size: None,
            step_rule: StepRule::Spectral,
            damping: 0.1,
            reference: None,
            stop_mse: None,
            init: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(invalid("damping", "must lie in [0, 1)"));
        }
        if let Some(s) = self.step_size {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("step_size", "must be positive"));
            }
        }
        if let StepRule::FrobeniusGram { scale } = self.step_rule {
            if !(scale > 0.0) {
                return Err(invalid("step_rule", "scale must be positive"));
            }
        }
        match &self.threshold {
            ThresholdPolicy::SeDriven { alpha, tau_schedule } => {
                if !(*alpha >= 0.0) || tau_schedule.is_empty() {
                    return Err(invalid("threshold_policy", "needs alpha >= 0 and a nonempty schedule"));
                }
            }
            ThresholdPolicy::EmpiricalTau { alpha } => {
                if !(*alpha >= 0.0) {
                    return Err(invalid("alpha", "must be nonnegative"));
                }
            }
            ThresholdPolicy::FixedLambda => {}
        }
        for (name, v) in [("reference", &self.reference), ("init", &self.init)] {
            if let Some(v) = v {
                if v.len() != p {
                    return Err(invalid(name, "length must equal p"));
                }
            }
        }
        Ok(())
    }
}

/// One recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub cost: f64,
    pub opt_mse: Option<f64>,
    pub elapsed_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    /// Row 0 is the starting point.
    pub rows: Vec<TraceRow>,
    pub final_beta: Vec<f64>,
    pub converged: bool,
    pub iters_used: usize,
    /// Set when the run stopped on a non-finite iterate.
    pub diagnostic: Option<String>,
    /// Threshold used at each iteration (AMP and VAMP).
    pub thresholds: Vec<f64>,
    /// Final AMP residual `z` (with Onsager term).
    pub final_z: Option<Vec<f64>>,
    pub step_size: Option<f64>,
}

impl SolverTrace {
    pub fn final_cost(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.cost)
    }

    pub fn diverged(&self) -> bool {
        self.diagnostic.is_some()
    }

    /// First iteration (>= 1) whose `opt_mse` is below `target`.
    pub fn iters_to_mse(&self, target: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.iter >= 1 && r.opt_mse.is_some_and(|m| m < target))
            .map(|r| r.iter)
    }

    /// Elapsed time at the iteration returned by [`Self::iters_to_mse`].
    pub fn ns_to_mse(&self, target: f64) -> Option<u64> {
        let it = self.iters_to_mse(target)?;
        self.rows.iter().find(|r| r.iter == it).map(|r| r.elapsed_ns)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Amp,
    Ista,
    Fista,
    Blockwise,
    Vamp,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Amp,
        SolverKind::Ista,
        SolverKind::Fista,
        SolverKind::Blockwise,
        SolverKind::Vamp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Amp => "amp",
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
            SolverKind::Blockwise => "blockwise",
            SolverKind::Vamp => "vamp",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("solver", "expected one of amp, ista, fista, blockwise, vamp"))
    }
}

pub fn solve(
    kind: SolverKind,
    instance: &ProblemInstance,
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<SolverTrace> {
    match kind {
        SolverKind::Amp => solve_amp(instance, config, clock),
        SolverKind::Ista => solve_ista(instance, config, clock),
        SolverKind::Fista => solve_fista(instance, config, clock),
        SolverKind::Blockwise => solve_blockwise(instance, config, clock),
        SolverKind::Vamp => solve_vamp(instance, config, clock),
    }
}

/// Step size for the gradient-type solvers on the columns `cols` of `x`.
pub fn step_size(x: &Matrix, cols: Option<&[usize]>, config: &SolverConfig) -> Result<f64> {
    if let Some(s) = config.step_size {
        return Ok(s);
    }
    let s = match config.step_rule {
        StepRule::Spectral => 0.95 / spectral_norm_sq(x, cols, 30)?,
        StepRule::FrobeniusGram { scale } => {
            let norm = match cols {
                None => x.gram_frobenius_norm(),
                Some(c) => Matrix::from_fn(x.rows(), c.len(), |i, j| x.get(i, c[j])).gram_frobenius_norm(),
            };
            scale / norm
        }
    };
    if s.is_finite() && s > 0.0 {
        Ok(s)
    } else {
        // all-zero design: any step works
        Ok(1.0)
    }
}

pub(crate) fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    libm::sqrt(dist_sq(new, old)) / libm::sqrt(norm_sq(old)).max(1.0)
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Collects trace rows; time spent computing `opt_mse` is excluded from
/// `elapsed_ns`.
pub(crate) struct Recorder<'a> {
    clock: &'a dyn Clock,
    start: u64,
    excluded: u64,
    reference: Option<&'a [f64]>,
    stop_mse: Option<f64>,
    pub rows: Vec<TraceRow>,
}

impl<'a> Recorder<'a> {
    pub fn new(instance: &'a ProblemInstance, config: &'a SolverConfig, clock: &'a dyn Clock) -> Self {
        let reference = config
            .reference
            .as_deref()
            .or(instance.truth.as_ref().map(|t| t.beta0.as_slice()));
        Self {
            clock,
            start: clock.now_ns(),
            excluded: 0,
            reference,
            stop_mse: config.stop_mse,
            rows: Vec::new(),
        }
    }

    /// Records a row; returns true when the `stop_mse` target is reached.
    pub fn record(&mut self, iter: usize, cost: f64, beta: &[f64]) -> bool {
        let now = self.clock.now_ns();
        let elapsed_ns = now.saturating_sub(self.start).saturating_sub(self.excluded);
        let opt_mse = self.reference.map(|r| dist_sq(beta, r) / beta.len() as f64);
        self.excluded += self.clock.now_ns().saturating_sub(now);
        self.rows.push(TraceRow {
            iter,
            cost,
            opt_mse,
            elapsed_ns,
        });
        iter > 0
            && matches!((opt_mse, self.stop_mse), (Some(m), Some(t)) if m < t)
    }

    pub fn finish(
        self,
        final_beta: Vec<f64>,
        converged: bool,
        iters_used: usize,
        diagnostic: Option<String>,
    ) -> SolverTrace {
        SolverTrace {
            rows: self.rows,
            final_beta,
            converged,
            iters_used,
            diagnostic,
            thresholds: Vec::new(),
            final_z: None,
            step_size: None,
        }
    }
}

pub(crate) fn diverged_message(iter: usize) -> String {
    alloc::format!("non-finite iterate at iteration {iter}")
}
