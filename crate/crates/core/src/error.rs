use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite: pivot {pivot:e} at position {index} after maximum jitter")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("subset enumeration too large: {count} subsets exceed the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("degenerate split: label entropy is zero, normalized MI is undefined")]
    DegenerateSplit,

    #[error("format error: {0}")]
    Format(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("non-finite value in embedding row {row}")]
    Data { row: usize },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid tag: {0}")]
    InvalidTag(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the environment or by malformed input files,
    /// as opposed to invalid requests.
    pub fn is_environmental(&self) -> bool {
        matches!(
            self,
            Error::Io(_) | Error::Json(_) | Error::Format(_) | Error::Consistency(_) | Error::Data { .. }
        )
    }
}
