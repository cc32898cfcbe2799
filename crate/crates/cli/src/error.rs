use gasmf::ErrorKind;
use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_PARTIAL: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] gasmf::Error),
    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
    #[error("{failed} of {total} partitions failed; their pixels are nodata")]
    Partial { failed: usize, total: usize },
    #[error("replay differs from the recorded run: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numerical => EXIT_NUMERICAL,
            },
            CliError::Output { .. } | CliError::Mismatch(_) => EXIT_DATA,
            CliError::Partial { .. } => EXIT_PARTIAL,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
