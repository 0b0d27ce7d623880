//! Experiment runner for the NFL laboratory: TOML configs in, JSON reports
//! and long-format CSV tables out.

pub mod canned;
pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{Arithmetic, ExperimentConfig, ExperimentKind};
pub use error::LabError;
pub use experiments::run_experiment;
pub use report::ExperimentReport;
