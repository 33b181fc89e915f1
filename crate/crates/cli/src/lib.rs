//! Library side of the `blockade` executable: config ingestion, the
//! subcommands and output formatting. Every command builds its full output in
//! memory before anything is written, so a failing run leaves no partial file.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use blockade_core::Error;

pub use config::ModelConfig;

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad or unreadable input (exit code 2).
    #[error("input error: {0}")]
    Input(String),
    /// The numerics failed on valid input (exit code 1).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::DegenerateSteadyState { .. }
            | Error::TracelessNullVector(_)
            | Error::Instability { .. }
            | Error::InvalidState(_)
            | Error::ClosureOverflow { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
