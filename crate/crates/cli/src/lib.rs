//! Experiment driver: configuration, orchestration and output files for the
//! `brwre` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::CliError;
