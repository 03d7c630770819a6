use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("capacity overflow: {k}^{q} codes exceed the exact integer range")]
    CapacityOverflow { q: usize, k: usize },

    #[error("geometry mismatch: expected {expected}, got {got}")]
    GeometryMismatch { expected: String, got: String },

    #[error("width mismatch: expected {expected} bits, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("no active state")]
    NoActiveState,

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("empty registry")]
    EmptyRegistry,

    #[error("pattern generation: {0}")]
    Generation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("model format: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
