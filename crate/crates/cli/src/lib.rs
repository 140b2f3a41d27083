//! Command-line driver for the determinant identity experiments: TOML
//! experiment configs, `z` sweeps, refinement ladders and report emission.

pub mod config;
pub mod emit;
pub mod experiments;
pub mod report;

pub use config::{Experiment, TOLERANCE_ENV};
pub use experiments::{convergence, run, RunError};
pub use report::{ConvergenceReport, Record, RunReport};

/// Exit status when every unexcluded residual passes its tier.
pub const EXIT_PASS: i32 = 0;
/// Exit status when some residual exceeds its tier.
pub const EXIT_TOLERANCE: i32 = 1;
/// Exit status for invalid configs, failed evaluations and I/O errors.
pub const EXIT_INVALID: i32 = 2;
