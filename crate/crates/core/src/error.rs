use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("unsupported dimension {dim} (at most {max} supported)")]
    UnsupportedDimension { dim: usize, max: usize },

    #[error("undefined fit: {0}")]
    UndefinedFit(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
