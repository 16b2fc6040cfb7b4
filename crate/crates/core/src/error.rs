use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid modulation: {0}")]
    InvalidModulation(String),
    #[error("unknown modulation dimension `{0}`")]
    UnknownDimension(String),
    #[error("modulation class `{0}` has no arms")]
    EmptyClass(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("index {index} out of range for {what} of size {len}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular linear system")]
    Singular,
    #[error("linear solve residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid grid map: {0}")]
    InvalidMap(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
