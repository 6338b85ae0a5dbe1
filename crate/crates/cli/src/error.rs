use std::path::PathBuf;

use riskmdp_core::Error as CoreError;

/// Everything a command can fail with, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("{0}")]
    Usage(String),
    #[error("guard exceeded: {0}")]
    Guard(CoreError),
    #[error("solver failure: {0}")]
    Solver(CoreError),
    #[error("certification failed: {0}")]
    Uncertified(String),
    #[error("residual {residual:e} exceeds tolerance {tol:e} in {equation} at state {state}")]
    Residual { equation: &'static str, state: String, residual: f64, tol: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Model(_) | CliError::Usage(_) => 2,
            CliError::Guard(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Uncertified(_) | CliError::Residual { .. } => 5,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::GuardExceeded { .. } => CliError::Guard(e),
            CoreError::DimensionMismatch { .. }
            | CoreError::RowSum { .. }
            | CoreError::BadProbability { .. }
            | CoreError::NonFiniteCost { .. }
            | CoreError::EmptyModel
            | CoreError::SupportViolation { .. }
            | CoreError::OutOfRange { .. } => CliError::Model(e.to_string()),
            CoreError::InvalidParameter(msg) => CliError::Usage(msg),
            _ => CliError::Solver(e),
        }
    }
}
