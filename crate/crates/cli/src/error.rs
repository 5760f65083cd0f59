use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] flatsaddle::Error),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 0 success, 1 usage or spec error, 2 numerical non-convergence, 3 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonConvergence(_) | CliError::Core(flatsaddle::Error::NonConvergence(_)) => 2,
            CliError::Invariant(_) | CliError::Core(flatsaddle::Error::Invariant(_)) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
