//! Proximal operator of the sparse group LASSO penalty
//!
//! ```text
//! η_γ(s, θ) = argmin_b ½‖s − b‖² + (1−γ)θ Σ_l √p_l ‖b_l‖₂ + γθ‖b‖₁
//! ```
//!
//! and the diagonal of its Jacobian. The penalty is separable across groups,
//! and within a group the prox is entrywise soft-thresholding at `γθ`
//! followed by group soft-thresholding at `(1−γ)θ√p_l`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, invalid, Error, Result};
use crate::model::GroupPartition;

/// Scalar soft-thresholding `η_soft(x; b)`.
#[inline]
pub fn soft_threshold(x: f64, b: f64) -> f64 {
    if x > b {
        x - b
    } else if x < -b {
        x + b
    } else {
        0.0
    }
}

/// Arguments of the SGL proximal operator.
#[derive(Debug, Clone, Copy)]
pub struct ProxInput<'a> {
    pub point: &'a [f64],
    pub threshold: f64,
    pub gamma: f64,
    pub partition: &'a GroupPartition,
}

impl ProxInput<'_> {
    fn validate(&self) -> Result<()> {
        check_len("prox point", self.partition.len(), self.point.len())?;
        check_threshold(self.threshold)?;
        check_gamma(self.gamma)
    }
}

pub(crate) fn check_threshold(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(Error::NegativeThreshold(t))
    } else {
        Ok(())
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(invalid("gamma", "must lie in [0, 1]"))
    }
}

pub fn prox_sgl(input: &ProxInput<'_>) -> Result<Vec<f64>> {
    input.validate()?;
    let mut out = vec![0.0; input.point.len()];
    apply(input, &mut out, None);
    Ok(out)
}

pub fn prox_sgl_jacobian_diag(input: &ProxInput<'_>) -> Result<Vec<f64>> {
    input.validate()?;
    let mut out = vec![0.0; input.point.len()];
    let mut deriv = vec![0.0; input.point.len()];
    apply(input, &mut out, Some(&mut deriv));
    Ok(deriv)
}

/// Prox value and Jacobian diagonal in one pass.
pub fn prox_sgl_with_jacobian(input: &ProxInput<'_>) -> Result<(Vec<f64>, Vec<f64>)> {
    input.validate()?;
    let mut out = vec![0.0; input.point.len()];
    let mut deriv = vec![0.0; input.point.len()];
    apply(input, &mut out, Some(&mut deriv));
    Ok((out, deriv))
}

/// Unchecked kernel shared by the solvers. Writes `η_γ(s, θ)` into `out`
/// and, when requested, the Jacobian diagonal into `deriv`. Returns the sum
/// of the Jacobian diagonal (zero when `deriv` is `None`).
pub(crate) fn apply(input: &ProxInput<'_>, out: &mut [f64], mut deriv: Option<&mut [f64]>) -> f64 {
    let ProxInput {
        point: s,
        threshold: theta,
        gamma,
        partition,
    } = *input;
    if theta == 0.0 {
        out.copy_from_slice(s);
        if let Some(d) = deriv {
            d.fill(1.0);
        }
        return s.len() as f64;
    }
    let l1 = gamma * theta;
    let mut trace = 0.0;
    for (l, idx) in partition.groups().enumerate() {
        let mut norm_sq = 0.0;
        for &j in idx {
            let u = soft_threshold(s[j], l1);
            out[j] = u;
            norm_sq += u * u;
        }
        let norm = libm::sqrt(norm_sq);
        let group_thr = (1.0 - gamma) * theta * partition.weights()[l];
        if norm <= group_thr {
            // killed group; the tie is resolved to zero as both branches meet there
            for &j in idx {
                out[j] = 0.0;
            }
            if let Some(d) = deriv.as_deref_mut() {
                for &j in idx {
                    d[j] = 0.0;
                }
            }
            continue;
        }
        let ratio = group_thr / norm;
        let shrink = 1.0 - ratio;
        match deriv.as_deref_mut() {
            Some(d) => {
                for &j in idx {
                    let u = out[j];
                    out[j] = u * shrink;
                    // |s_j| = γθ exactly counts as inside the dead zone
                    let dj = if libm::fabs(s[j]) > l1 {
                        1.0 - ratio * (1.0 - u * u / norm_sq)
                    } else {
                        0.0
                    };
                    d[j] = dj;
                    trace += dj;
                }
            }
            None => {
                for &j in idx {
                    out[j] *= shrink;
                }
            }
        }
    }
    trace
}

/// Value of the SGL penalty `(1−γ)λ Σ_l √p_l ‖β_l‖₂ + γλ‖β‖₁`.
pub fn penalty(beta: &[f64], lambda: f64, gamma: f64, partition: &GroupPartition) -> f64 {
    let mut group_sum = 0.0;
    for (l, idx) in partition.groups().enumerate() {
        let nsq: f64 = idx.iter().map(|&j| beta[j] * beta[j]).sum();
        group_sum += partition.weights()[l] * libm::sqrt(nsq);
    }
    let l1: f64 = beta.iter().map(|b| libm::fabs(*b)).sum();
    (1.0 - gamma) * lambda * group_sum + gamma * lambda * l1
}

/// Objective minimized by the prox: `½‖s − b‖² + penalty(b)`.
pub fn prox_objective(s: &[f64], b: &[f64], theta: f64, gamma: f64, partition: &GroupPartition) -> f64 {
    0.5 * crate::linalg::dist_sq(s, b) + penalty(b, theta, gamma, partition)
}
