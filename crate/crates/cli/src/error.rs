use thiserror::Error;

/// Failures of a CLI run, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or inconsistent configuration (exit 2).
    #[error("config error: {0}")]
    Config(String),

    /// A computation failed part way through (exit 3).
    #[error("numerical failure: {0}")]
    Numeric(#[from] lazyvi::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("no analytic truth is available for experiment `{0}`")]
    MissingTruth(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::MissingTruth(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
