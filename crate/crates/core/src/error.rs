use thiserror::Error;

/// Errors produced by the tensor kernels, the CP model and the solvers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum CpError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mode {mode} out of range for an order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("index {index:?} out of bounds for dims {dims:?}")]
    IndexOutOfBounds { index: Vec<usize>, dims: Vec<usize> },

    #[error("iterate length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("data tensor has zero norm")]
    ZeroTensor,

    #[error("Gram-Hadamard system for mode {mode} is singular even after ridge regularization")]
    SingularSystem { mode: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CpError {
    fn from(e: std::io::Error) -> Self {
        CpError::Io(e.to_string())
    }
}

pub type Result<T, E = CpError> = std::result::Result<T, E>;
