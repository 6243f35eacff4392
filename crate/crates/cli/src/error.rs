use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] tcm_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for a truncation-guard abort, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(tcm_core::Error::TruncationGuard { .. }) => 2,
            _ => 1,
        }
    }
}
