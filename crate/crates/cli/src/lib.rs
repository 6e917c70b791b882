//! Library surface of the experiment runner, exposed so the acceptance
//! suite can drive scenarios in-process.

pub mod config;
pub mod outputs;
pub mod scenarios;

use thiserror::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration unreadable or invalid (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// A numerical stage failed (exit 3).
    #[error("numerical failure in stage {stage}: {message}")]
    Numerical { stage: &'static str, message: String },
    /// In-run assertions failed (exit 1).
    #[error("assertion failures:\n{}", .0.join("\n"))]
    Assertions(Vec<String>),
    /// Output files could not be written (exit 3).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Assertions(_) => 1,
            CliError::Numerical { .. } | CliError::Io(_) => 3,
        }
    }

    pub fn numerical(stage: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Numerical {
            stage,
            message: err.to_string(),
        }
    }
}
