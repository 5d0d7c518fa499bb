//! Command-line harness over `crra-core`: single-market commands and a
//! reproducible subset study writing CSV tables and a JSON summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod study;

pub use config::StudyConfig;
pub use error::{CliError, CliResult};
pub use study::{run_study, StudyReport};
