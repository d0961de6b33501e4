use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation would exceed a configured table size or integer width.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("embedding capacity exceeded: C_{m} supports at most {max} logical variables, {requested} requested")]
    Capacity {
        requested: usize,
        max: usize,
        m: usize,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by solver or table limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::ResourceLimit(_) | Error::Capacity { .. })
    }
}
