use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by [`ErrorKind`] so front ends can map them onto exit
/// codes without matching every case.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated data: expected {expected} bytes, found {found}")]
    TruncatedData { expected: u64, found: u64 },
    #[error("no band centers fall inside [{lo}, {hi}] nm")]
    EmptyBandSelection { lo: f64, hi: f64 },
    #[error("invalid column group size {group} for {samples} samples")]
    InvalidGroupSize { group: usize, samples: usize },
    #[error("write failed for {path}: {reason}")]
    WriteError { path: PathBuf, reason: String },
    #[error("fine grid [{grid_lo}, {grid_hi}] nm does not cover [{need_lo}, {need_hi}] nm")]
    GridCoverageError {
        grid_lo: f64,
        grid_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("partition contains no valid pixels")]
    EmptyPartition,
    #[error("need at least {needed} samples, have {found}")]
    InsufficientSamples { needed: usize, found: usize },
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("covariance is singular after conditioning (last jitter {jitter:e})")]
    SingularCovariance { jitter: f64 },
    #[error("mean spectrum has zero norm")]
    DegenerateMean,
    #[error("target has non-positive whitened energy t'C^-1 t = {0:e}")]
    DegenerateTarget(f64),
    #[error("invalid Savitzky-Golay filter: {0}")]
    InvalidFilterSpec(String),
    #[error("plume source ({line}, {sample}) is outside the grid")]
    InvalidSource { line: usize, sample: usize },
    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),
    #[error("regression is degenerate: {0}")]
    DegenerateRegression(String),
    #[error("invalid filter configuration: {0}")]
    InvalidConfig(String),
    #[error("partition {index}: {source}")]
    Partition {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {reason}")]
    Csv { path: PathBuf, reason: String },
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or inputs supplied by the caller.
    Usage,
    /// File format, shape or I/O problems.
    Data,
    /// Numerical breakdown (singular covariance, degenerate targets).
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            SingularCovariance { .. } | DegenerateMean | DegenerateTarget(_) | DegenerateRegression(_) => {
                ErrorKind::Numerical
            }
            InvalidGroupSize { .. }
            | InvalidFilterSpec(_)
            | InvalidSource { .. }
            | InvalidRoi(_)
            | InvalidConfig(_)
            | EmptyBandSelection { .. }
            | Csv { .. }
            | ContractViolation(_) => ErrorKind::Usage,
            Partition { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
