use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::{DesignSpec, GroupPartition, PriorSpec};
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{norm_sq, Matrix};
use crate::prox::{check_gamma, penalty, soft_threshold};
use crate::random::{self, ids};

/// Ground truth of a synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta0: Vec<f64>,
    pub noise: Vec<f64>,
}

/// A sparse group LASSO problem `min ½‖y − Xβ‖² + penalty(β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub design: Matrix,
    pub response: Vec<f64>,
    pub partition: GroupPartition,
    pub lambda: f64,
    pub gamma: f64,
    pub truth: Option<Truth>,
}

/// How the group labels relate to the signal support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupMode {
    /// Two groups; every true signal is placed in group 1, group 2 holds nulls.
    Perfect,
    /// A single group, so signals and nulls are mixed.
    Mixed,
    /// Use the given partition; signal positions are i.i.d.
    AsGiven,
}

impl ProblemInstance {
    pub fn new(
        design: Matrix,
        response: Vec<f64>,
        partition: GroupPartition,
        lambda: f64,
        gamma: f64,
    ) -> Result<Self> {
        check_len("response", design.rows(), response.len())?;
        check_len("partition", design.cols(), partition.len())?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        check_gamma(gamma)?;
        Ok(Self {
            design,
            response,
            partition,
            lambda,
            gamma,
            truth: None,
        })
    }

    pub fn with_truth(mut self, truth: Truth) -> Result<Self> {
        check_len("beta0", self.p(), truth.beta0.len())?;
        check_len("noise", self.n(), truth.noise.len())?;
        self.truth = Some(truth);
        Ok(self)
    }

    /// Same data with a different penalty level.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(invalid("lambda", "must be finite and nonnegative"));
        }
        out.lambda = lambda;
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn p(&self) -> usize {
        self.design.cols()
    }

    /// `δ = n/p`.
    pub fn delta(&self) -> f64 {
        self.n() as f64 / self.p() as f64
    }

    pub fn penalty(&self, beta: &[f64]) -> f64 {
        penalty(beta, self.lambda, self.gamma, &self.partition)
    }

    /// `½‖y − Xβ‖² + (1−γ)λ Σ_l √p_l ‖β_l‖₂ + γλ‖β‖₁`
    pub fn cost(&self, beta: &[f64]) -> Result<f64> {
        check_len("beta", self.p(), beta.len())?;
        let residual = self.residual(beta);
        Ok(self.cost_from_residual(beta, &residual))
    }

    /// Cost when `y − Xβ` is already known.
    pub fn cost_from_residual(&self, beta: &[f64], residual: &[f64]) -> f64 {
        0.5 * norm_sq(residual) + self.penalty(beta)
    }

    /// `y − Xβ`
    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.design.mul_vec(beta);
        for (ri, yi) in r.iter_mut().zip(&self.response) {
            *ri = yi - *ri;
        }
        r
    }

    /// Largest violation of the optimality condition
    /// `Xᵀ(y − Xβ) ∈ λ·∂penalty(β)` at penalty level `lambda`.
    ///
    /// For a surviving group the condition is checked coordinatewise; for a
    /// zero group it is `‖η_soft(g_l, γλ)‖₂ ≤ (1−γ)λ√p_l`.
    pub fn subgradient_residual(&self, beta: &[f64], lambda: f64) -> Result<f64> {
        check_len("beta", self.p(), beta.len())?;
        let grad = self.design.tr_mul_vec(&self.residual(beta));
        let gamma = self.gamma;
        let mut worst: f64 = 0.0;
        for (l, idx) in self.partition.groups().enumerate() {
            let w = self.partition.weights()[l];
            let bnorm = libm::sqrt(idx.iter().map(|&j| beta[j] * beta[j]).sum::<f64>());
            if bnorm == 0.0 {
                let excess_sq: f64 = idx
                    .iter()
                    .map(|&j| soft_threshold(grad[j], gamma * lambda).powi(2))
                    .sum();
                worst = worst.max(libm::sqrt(excess_sq) - (1.0 - gamma) * lambda * w);
                continue;
            }
            for &j in idx {
                let group_part = (1.0 - gamma) * lambda * w * beta[j] / bnorm;
                let v = if beta[j] != 0.0 {
                    libm::fabs(grad[j] - group_part - gamma * lambda * libm::copysign(1.0, beta[j]))
                } else {
                    libm::fabs(grad[j]) - gamma * lambda
                };
                worst = worst.max(v);
            }
        }
        Ok(worst.max(0.0))
    }
}

fn draw_common(
    design: &DesignSpec,
    prior: &PriorSpec,
    seed: u64,
) -> (Matrix, Vec<f64>, Vec<f64>) {
    let x = design.sample(&mut random::stream(seed, ids::DESIGN));
    let mut srng = random::stream(seed, ids::SIGNAL);
    let values: Vec<f64> = (0..design.p).map(|_| prior.signal.sample(&mut srng)).collect();
    let mut nrng = random::stream(seed, ids::NOISE);
    let noise: Vec<f64> = (0..design.n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut nrng);
            prior.noise_sd * z
        })
        .collect();
    (x, values, noise)
}

fn assemble(
    x: Matrix,
    beta0: Vec<f64>,
    noise: Vec<f64>,
    partition: GroupPartition,
    lambda: f64,
    gamma: f64,
) -> Result<ProblemInstance> {
    let mut y = x.mul_vec(&beta0);
    for (yi, wi) in y.iter_mut().zip(&noise) {
        *yi += wi;
    }
    ProblemInstance::new(x, y, partition, lambda, gamma)?.with_truth(Truth { beta0, noise })
}

/// Draws `X`, `β₀ ~ Π` i.i.d. and `w ~ N(0, σ_w²)`, and sets `y = Xβ₀ + w`.
///
/// In `Perfect` mode the drawn nonzero values are placed, in order, on the
/// coordinates of group 1; `Mixed` replaces the partition by a single group.
/// The result is a pure function of the arguments.
pub fn generate_instance(
    design: &DesignSpec,
    prior: &PriorSpec,
    partition: &GroupPartition,
    lambda: f64,
    gamma: f64,
    mode: GroupMode,
    seed: u64,
) -> Result<ProblemInstance> {
    check_len("partition", design.p, partition.len())?;
    prior.signal.validate()?;
    let (x, values, noise) = draw_common(design, prior, seed);
    let (beta0, partition) = match mode {
        GroupMode::AsGiven => (values, partition.clone()),
        GroupMode::Mixed => (values, GroupPartition::single(design.p)?),
        GroupMode::Perfect => {
            if partition.num_groups() != 2 {
                return Err(Error::PerfectModeGroups(partition.num_groups()));
            }
            let support: Vec<f64> = values.into_iter().filter(|v| *v != 0.0).collect();
            let slots = partition.members(0);
            if support.len() > slots.len() {
                return Err(Error::SupportExceedsCapacity {
                    support: support.len(),
                    capacity: slots.len(),
                });
            }
            let mut beta0 = vec![0.0; design.p];
            for (&j, v) in slots.iter().zip(support) {
                beta0[j] = v;
            }
            (beta0, partition.clone())
        }
    };
    assemble(x, beta0, noise, partition, lambda, gamma)
}

/// Perfect group information with group 1 sized to the realized support:
/// the support occupies the leading coordinates and group 2 the rest. Uses
/// the same random streams as [`generate_instance`].
pub fn generate_perfect_instance(
    design: &DesignSpec,
    prior: &PriorSpec,
    lambda: f64,
    gamma: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    prior.signal.validate()?;
    let (x, values, noise) = draw_common(design, prior, seed);
    let mut beta0: Vec<f64> = values.iter().copied().filter(|v| *v != 0.0).collect();
    let k = beta0.len();
    beta0.resize(design.p, 0.0);
    let partition = if k == 0 || k == design.p {
        GroupPartition::single(design.p)?
    } else {
        GroupPartition::contiguous(&[k, design.p - k])?
    };
    assemble(x, beta0, noise, partition, lambda, gamma)
}
