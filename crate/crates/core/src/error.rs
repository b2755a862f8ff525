use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("exponent `{0}` is not a non-negative integer")]
    NonIntegerExponent(String),

    #[error("duplicate variable `{0}` in variable order")]
    DuplicateVariable(String),

    #[error("non-finite value encountered during evaluation")]
    NonFiniteValue,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid bound: {0}")]
    InvalidBound(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mode unsupported: {0}")]
    ModeUnsupported(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
