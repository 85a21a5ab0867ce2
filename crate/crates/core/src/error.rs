use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("unsupported tensor: {0}")]
    UnsupportedTensor(String),

    #[error("content region {0} has no counterpart in the style mask")]
    MissingStyleRegion(i64),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used by the CLI when reporting failures.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "InvalidInput",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::Shape(_) => "ShapeError",
            Error::Format(_) => "FormatError",
            Error::UnsupportedTensor(_) => "UnsupportedTensor",
            Error::MissingStyleRegion(_) => "MissingStyleRegion",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
