//! Seeded experiment harness.
//!
//! An [`ExperimentConfig`] names one of the experiments and the grid of
//! network sizes, seeds, levels and transport parameters to sweep.
//! [`run_experiment`] executes every run (in parallel when enabled) and
//! [`write_report`] stores the results as CSV with a JSON mirror.
//!
//! Every algorithm within one config point sees the same graph and the same
//! initial values, and a given `(config, seed)` always reproduces the same
//! rows.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{Algorithm, AutoBounds, ExperimentConfig, ExperimentId, InitMode};
pub use experiments::{initial_values, run_experiment, AggregateRow, ExperimentReport, RunFailure, RunRow, Stats};
pub use output::write_report;
