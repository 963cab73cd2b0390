use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are coarse on purpose: the CLI maps each group onto an exit
/// code (see [`Error::exit_code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("noise point outside the noise box: {0}")]
    Domain(String),

    #[error("window index {index} outside span [{lo}, {hi})")]
    Index { index: i64, lo: i64, hi: i64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("structural estimation failed: {0}")]
    Structural(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("conjugacy construction failed: {0}")]
    Construction(String),

    #[error("non-generic sequence: {0}")]
    Genericity(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    /// Process exit code: 2 config/usage, 3 structure, 4 conjugacy, 5 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Usage(_) | Error::Domain(_) => 2,
            Error::Structural(_) | Error::Inconclusive(_) => 3,
            Error::Construction(_) | Error::Genericity(_) => 4,
            Error::Numeric(_) | Error::Index { .. } | Error::Precondition(_) => 5,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
