//! Library half of the `floss` command-line tool.
//!
//! Subcommands are implemented here so integration tests can drive them
//! in-process; `main.rs` only parses arguments, prints, and maps errors to
//! exit codes (0 success, 2 input error, 3 runtime or divergence error).

pub mod args;
pub mod commands;
pub mod config;
pub mod dump;
pub mod report;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or incompatible inputs.
    #[error("{0}")]
    Input(String),
    /// Failures after inputs were accepted, e.g. training divergence.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<floss_core::Error> for CliError {
    fn from(e: floss_core::Error) -> Self {
        match e {
            floss_core::Error::DivergenceDetected { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}
