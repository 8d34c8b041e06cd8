//! File formats, experiment configuration, timing and the `sgl` command
//! line on top of [`sgl_core`].

pub mod bench;
pub mod cli;
pub mod clock;
pub mod config;
pub mod error;
pub mod export;
pub mod format;

pub use clock::StdClock;
pub use config::ExperimentConfig;
pub use error::{Error, Result};
