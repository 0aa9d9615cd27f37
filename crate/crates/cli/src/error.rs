//! CLI error type with the documented process exit codes.

use retrospin_core::Error as CoreError;

/// Exit codes: 0 success, 2 configuration error, 3 numerical or accuracy
/// failure, 4 acceptance-check failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse { .. } | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Config(msg) | CoreError::Parameter(msg) => CliError::Config(msg),
            CoreError::Accuracy(msg) | CoreError::Statistics(msg) | CoreError::Calibration(msg) => {
                CliError::Numerical(msg)
            }
        }
    }
}
