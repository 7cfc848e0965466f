use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum TnfError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("inconsistent state: {0}")]
    State(String),
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("malformed structure: {0}")]
    Structure(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
    #[error("representation error: {0}")]
    Representation(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TnfError>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::error::TnfError::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
