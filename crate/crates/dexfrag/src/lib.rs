//! IO, file formats and orchestration around `dexfrag-core`.
//!
//! The library half of the CLI: configuration loading, CSV emission with
//! reproducibility trailers, the experiment pipeline behind each subcommand,
//! and SVG rendering of the result files.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod pipeline;
pub mod plots;

use thiserror::Error;

/// Top-level failure classes, mapped one-to-one onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
