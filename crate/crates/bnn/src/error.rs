use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum BnnError {
    LengthMismatch {
        expected: usize,
        got: usize,
    },
    DimensionMismatch {
        layer: usize,
        expected_in: usize,
        got: usize,
    },
    InvalidParameter(String),
    /// Model file problems carry the byte offset where parsing stopped.
    ModelFormat {
        offset: usize,
        message: String,
    },
    /// Training diverged (validation accuracy below chance after an epoch).
    Diverged {
        epoch: usize,
        accuracy: f64,
    },
    Io(String),
}

impl fmt::Display for BnnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BnnError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            BnnError::DimensionMismatch {
                layer,
                expected_in,
                got,
            } => write!(
                f,
                "layer {layer}: input length {got} does not match fan-in {expected_in}"
            ),
            BnnError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            BnnError::ModelFormat { offset, message } => {
                write!(f, "model format error at byte {offset}: {message}")
            }
            BnnError::Diverged { epoch, accuracy } => write!(
                f,
                "training diverged: validation accuracy {accuracy:.4} below chance after epoch {epoch}"
            ),
            BnnError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for BnnError {}

impl From<std::io::Error> for BnnError {
    fn from(e: std::io::Error) -> Self {
        BnnError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, BnnError>;
