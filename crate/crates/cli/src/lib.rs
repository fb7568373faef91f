//! Command-line harness around the `ngcp` solvers: problem generation,
//! single solves with trace output, seed sweeps with accuracy-to-target
//! statistics, and plot data.

// Negated comparisons are used so that NaN fails validity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;

pub use cli::run;
pub use error::{CliError, CliResult};
