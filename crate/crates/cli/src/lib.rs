//! `fastctl`: batch experiments on the moment-control library.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;

use thiserror::Error;

pub use args::{run, Cli};
pub use config::{ExperimentConfig, Preset};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precision(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<moment_control::Error> for CliError {
    fn from(e: moment_control::Error) -> Self {
        use moment_control::Error as E;
        match e {
            E::PrecisionInsufficient { .. } => CliError::Precision(e.to_string()),
            E::DomainError(_) | E::GapViolation(_) | E::UnknownIndex(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
