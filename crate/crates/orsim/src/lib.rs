//! Experiment runner for the relay-network opportunistic routing
//! simulator: configuration, density and load sweeps, selection reports
//! and a quick self check.

#![forbid(unsafe_code)]

pub mod config;
pub mod explain;
pub mod runner;
pub mod selftest;

pub use config::{ConfigError, ExperimentConfig, Profile};
pub use explain::{explain_selection, ExplainError, Explanation};
pub use runner::{run_sweep, to_aggregate, to_csv, RowResult, Sweep, CSV_HEADER};
