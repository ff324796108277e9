//! Experiment runner and acceptance suite on top of `renormlab-core`.

pub mod acceptance;
pub mod config;
pub mod csv;
pub mod error;
pub mod experiments;
pub mod report;

pub use acceptance::{acceptance_suite, acceptance_suite_with, run_check, AcceptanceOptions, CHECK_NAMES};
pub use config::ExperimentConfig;
pub use error::LabError;
pub use experiments::{run_experiment, Outcome};
pub use report::{CheckResult, RunReport};
