use thiserror::Error;
use tnf_core::TnfError;

#[derive(Debug, Error)]
pub enum LabError {
    /// Schema violation, reported with the JSON path of the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error(transparent)]
    Core(#[from] TnfError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config { path: path.into(), message: message.into() }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io { path: path.display().to_string(), source }
    }

    /// 0 success, 2 config error, 3 resource guard, 4 numerical abort, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config { .. } | LabError::Core(TnfError::Argument(_)) => 2,
            LabError::Core(TnfError::Resource(_)) => 3,
            LabError::Core(TnfError::Numerical(_)) => 4,
            _ => 1,
        }
    }
}
