use splogsum::{DataError, MetricsError, PenaltyError, SimError, SolverError, SplError};
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("solver diverged: {0}")]
    Divergence(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Failed(_) => 1,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn output(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot write `{}`: {e}", path.display()))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PenaltyError> for CliError {
    fn from(e: PenaltyError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Divergence { .. } | SolverError::NoValidLambda => CliError::Divergence(e.to_string()),
            SolverError::Penalty(_) | SolverError::BadFolds(_) | SolverError::BadWeights => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SplError> for CliError {
    fn from(e: SplError) -> Self {
        match e {
            SplError::Solver(inner) => inner.into(),
            SplError::NonFiniteLoss(_) => CliError::Divergence(e.to_string()),
            SplError::BadStep(_) | SplError::NoAges | SplError::BadGamma(_) => CliError::Config(e.to_string()),
            SplError::Csv(_) | SplError::Io(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Data(inner) => inner.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}
