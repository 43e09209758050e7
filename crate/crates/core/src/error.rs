use crate::topology::PageId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("page id {0} is not part of the topology")]
    InvalidPage(PageId),

    #[error("requests of user `{user}` are not time-sorted at position {position}")]
    Unsorted { user: String, position: usize },

    #[error("session of length {length} exceeds the oracle limit of {limit}")]
    OracleLimit { length: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ground truth is empty")]
    EmptyTruth,

    #[error("ground truth does not match the log: {0}")]
    TruthMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
