use thiserror::Error;

/// Errors raised by the chain simulation and restoring pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain of {0} sites exceeds the supported maximum of {max}", max = crate::chain::MAX_SITES)]
    Capacity(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("odd-parity block ({row}, {col}) is nonzero (max norm {norm:e})")]
    ParityViolation { row: usize, col: usize, norm: f64 },

    #[error("generator ({p}, {q}) connects sectors of different excitation parity")]
    MixedParityGenerator { p: usize, q: usize },

    #[error("non-finite time {0}")]
    NonFiniteTime(f64),

    #[error("no accepted solution after {starts} starts (best residual {best_residual:e})")]
    NoSolution { starts: usize, best_residual: f64 },

    #[error("empty solution list")]
    EmptySolutions,

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
