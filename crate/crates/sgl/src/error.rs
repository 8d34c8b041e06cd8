use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] sgl_core::Error),
    #[error("solver diverged: {0}")]
    Diverged(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for a solver
    /// that diverged, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Core(sgl_core::Error::InvalidParameter { .. })
            | Error::Core(sgl_core::Error::NegativeThreshold(_))
            | Error::Core(sgl_core::Error::PerfectModeGroups(_))
            | Error::Core(sgl_core::Error::SupportExceedsCapacity { .. })
            | Error::Core(sgl_core::Error::LambdaOutOfRange { .. }) => 2,
            Error::Diverged(_)
            | Error::Core(sgl_core::Error::StepTooLarge { .. })
            | Error::Core(sgl_core::Error::Degenerate(_)) => 3,
            _ => 1,
        }
    }
}
