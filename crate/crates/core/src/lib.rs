//! Sparse group LASSO via approximate message passing.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the numerical
//! pieces only: the proximal kernel, five solvers, the state-evolution and
//! calibration machinery, and the empirical-vs-predicted harnesses. File
//! formats, timing and the command line live in the `sgl` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod prox;
pub mod random;
pub mod solvers;
pub mod special;
pub mod state_evolution;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use model::{
    generate_instance, generate_perfect_instance, DesignKind, DesignSpec, GroupMode,
    GroupPartition, PriorSpec, ProblemInstance, Signal, Truth,
};
pub use prox::{prox_sgl, prox_sgl_jacobian_diag, soft_threshold, ProxInput};
pub use state_evolution::{
    admissible_interval, alpha_of_lambda, lambda_of_alpha, predict_metrics, se_fixed_point, se_map,
    t_func, SEEngine, SEOutcome, SEParams,
};
pub use analysis::{empirical_metrics, qq_compare, solve_minimizer, sweep_path, Metrics, PathResult, PathRow, QqRow};
pub use solvers::{solve, Clock, NoClock, SolverConfig, SolverKind, SolverTrace, StepRule, ThresholdPolicy};
