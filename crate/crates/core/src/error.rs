use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An enumeration would exceed a documented size cap.
    #[error("{what} is capped at {cap}, got {got}")]
    ResourceLimit {
        what: &'static str,
        cap: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn cap(what: &'static str, cap: usize, got: usize) -> Self {
        Error::ResourceLimit { what, cap, got }
    }
}
