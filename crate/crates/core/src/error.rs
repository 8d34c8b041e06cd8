use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("group membership vector is empty")]
    EmptyPartition,
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("perfect group mode needs exactly 2 groups, partition has {0}")]
    PerfectModeGroups(usize),
    #[error("signal support {support} exceeds group-1 capacity {capacity}")]
    SupportExceedsCapacity { support: usize, capacity: usize },
    #[error("cost increased at iteration {iter} (by {increase:e}); try step size <= {suggested:e}")]
    StepTooLarge {
        iter: usize,
        increase: f64,
        suggested: f64,
    },
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("state evolution oscillates beyond Monte Carlo noise at alpha={alpha}; increase mc_samples")]
    Oscillation { alpha: f64 },
    #[error("lambda {lambda} is not below lambda_max {lambda_max}")]
    LambdaOutOfRange { lambda: f64, lambda_max: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
