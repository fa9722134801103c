use thiserror::Error;

/// Errors raised across the crate.
///
/// Validation routines that produce reports (`check_socc`, `validate_tom`,
/// `validate_tem`, `verify_mode_map`) never return these; they carry their
/// failures inside the report instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("rank error: {0}")]
    Rank(String),
    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not connected: {0}")]
    Connectivity(String),
    #[error("jagged tensor: {0}")]
    Jagged(String),
    #[error("hyper tensor: {0}")]
    Hyper(String),
    #[error("non-injective array: {0}")]
    NonInjective(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("mode error: {0}")]
    Mode(String),
    #[error("algebra error: {0}")]
    Algebra(String),
    #[error("arity error: {0}")]
    Arity(String),
    #[error("coupling error: {0}")]
    Coupling(String),
    #[error("duplicate tensor: {0}")]
    DuplicateTensor(String),
    #[error("binding error: {0}")]
    Binding(String),
    #[error("sampling timeout: {0}")]
    SamplingTimeout(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
