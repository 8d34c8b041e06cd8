use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};

/// Distribution of a single signal entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    /// `value` with probability `eps`, zero otherwise ("5×Bernoulli(0.1)" is
    /// `PointMassMixture { eps: 0.1, value: 5.0 }`).
    PointMassMixture { eps: f64, value: f64 },
    /// `N(0, sd²)` with probability `eps`, zero otherwise.
    BernoulliGaussian { eps: f64, sd: f64 },
    Zero,
}

impl Signal {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Signal::PointMassMixture { eps, value } => {
                check_eps(eps)?;
                if !value.is_finite() {
                    return Err(invalid("value", "must be finite"));
                }
            }
            Signal::BernoulliGaussian { eps, sd } => {
                check_eps(eps)?;
                if !(sd.is_finite() && sd >= 0.0) {
                    return Err(invalid("sd", "must be finite and nonnegative"));
                }
            }
            Signal::Zero => {}
        }
        Ok(())
    }

    /// `P(Π ≠ 0)`.
    pub fn nonzero_prob(&self) -> f64 {
        match *self {
            Signal::PointMassMixture { eps, value } if value != 0.0 => eps,
            Signal::BernoulliGaussian { eps, sd } if sd > 0.0 => eps,
            _ => 0.0,
        }
    }

    /// `E[Π²]`.
    pub fn second_moment(&self) -> f64 {
        match *self {
            Signal::PointMassMixture { eps, value } => eps * value * value,
            Signal::BernoulliGaussian { eps, sd } => eps * sd * sd,
            Signal::Zero => 0.0,
        }
    }

    /// The conditional law `Π | Π ≠ 0` as a signal with `eps = 1`.
    pub fn nonzero_part(&self) -> Signal {
        match *self {
            Signal::PointMassMixture { value, .. } => Signal::PointMassMixture { eps: 1.0, value },
            Signal::BernoulliGaussian { sd, .. } => Signal::BernoulliGaussian { eps: 1.0, sd },
            Signal::Zero => Signal::Zero,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Signal::PointMassMixture { eps, value } => {
                if rng.random::<f64>() < eps {
                    value
                } else {
                    0.0
                }
            }
            Signal::BernoulliGaussian { eps, sd } => {
                // Always draw both so the stream position does not depend on the outcome.
                let u = rng.random::<f64>();
                let z: f64 = StandardNormal.sample(rng);
                if u < eps {
                    sd * z
                } else {
                    0.0
                }
            }
            Signal::Zero => 0.0,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(invalid("eps", "must lie in [0, 1]"))
    }
}

/// Signal law `Π` together with the noise level `σ_w` (noise is Gaussian).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub signal: Signal,
    pub noise_sd: f64,
}

impl PriorSpec {
    pub fn new(signal: Signal, noise_sd: f64) -> Result<Self> {
        signal.validate()?;
        if !(noise_sd.is_finite() && noise_sd >= 0.0) {
            return Err(invalid("noise_sd", "must be finite and nonnegative"));
        }
        Ok(Self { signal, noise_sd })
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_sd * self.noise_sd
    }
}
