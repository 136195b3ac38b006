use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("text is empty or whitespace only")]
    EmptyText,
    #[error("text has no alphanumeric tokens to encode")]
    ZeroText,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("dimension mismatch at row {row}: expected {expected}, found {found}")]
    RowDimMismatch { row: usize, expected: usize, found: usize },
    #[error("vector has a non-finite component")]
    NonFinite,
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("missing embedding for {0}")]
    MissingEmbedding(String),
    #[error("encoder backend error: {0}")]
    Backend(String),
    #[error("index has no rows")]
    EmptyIndex,
    #[error("k must be at least 1")]
    BadK,
    #[error("word budget must be at least 1")]
    BadBudget,
    #[error("index is incompatible: {0}")]
    IncompatibleIndex(String),
    #[error("no gold answers for query {0}")]
    MissingGold(String),
    #[error("duplicate passage id {id:?} at position {position}")]
    DuplicateId { id: String, position: usize },
    #[error("index row references unknown passage {0:?}")]
    UnknownPassage(String),
    #[error("template error: {0}")]
    Template(String),
}
