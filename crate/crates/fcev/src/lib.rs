//! Command-line front end for the fractional CEV pricing engines: JSON run
//! configs, parallel Monte Carlo, engine cross-checks and CSV/JSON reports.
//!
//! Exit codes: 0 success, 1 a cross-check failed, 2 configuration or output
//! error, 3 numerical error. Failures print a JSON object to stderr.

#![warn(missing_docs)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod parallel;
pub mod report;
pub mod xcheck;

pub use config::{Format, Overrides, RunConfig};
pub use error::{exit, CliError};
