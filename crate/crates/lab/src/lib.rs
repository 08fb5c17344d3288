//! Experiment harness for `tokenlab-core`: JSON configuration, the
//! performance-record CSV, plain-text reports, end-to-end runs and the live
//! session server.

pub mod config;
pub mod dataset;
pub mod experiment;
pub mod protocol;
pub mod report;
pub mod server;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ReportBundle};
