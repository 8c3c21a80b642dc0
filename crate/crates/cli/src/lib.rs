//! Batch driver for correlator dynamics: reads a JSON run configuration,
//! executes the requested tasks and writes deterministic result files.

pub mod config;
pub mod tasks;

use thiserror::Error;

pub use config::{Observable, RunConfig, Task};
pub use tasks::execute;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("size cap: {0}")]
    TooLarge(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::TooLarge(_) => 4,
        }
    }
}

impl From<corrdyn::error::Error> for CliError {
    fn from(e: corrdyn::error::Error) -> Self {
        match e {
            corrdyn::error::Error::TooLarge { .. } => CliError::TooLarge(e.to_string()),
            e if e.is_numeric() => CliError::Numeric(e.to_string()),
            e => CliError::Parse(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
