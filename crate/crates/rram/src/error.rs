use std::fmt;

/// Errors surfaced by the device model, array and analytics operations.
#[derive(Debug, Clone, PartialEq)]
pub enum RramError {
    /// Programming condition not present in the table; carries the closest
    /// known conditions to help spot typos in experiment specs.
    UnknownCondition {
        requested: String,
        nearest: Vec<String>,
    },
    InvalidParameter(String),
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    LengthMismatch {
        expected: usize,
        got: usize,
    },
    /// Root finding could not bracket the requested target.
    RootNotBracketed {
        what: String,
        lo: f64,
        hi: f64,
    },
    RatioBelowOne(f64),
    /// Exact ECC enumeration is limited to short codes.
    CodeTooLong {
        n: usize,
        max: usize,
    },
    ConfigParse {
        line: usize,
        message: String,
    },
}

impl fmt::Display for RramError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RramError::UnknownCondition { requested, nearest } => {
                write!(
                    f,
                    "unknown programming condition {requested}; nearest known: "
                )?;
                if nearest.is_empty() {
                    write!(f, "(table is empty)")
                } else {
                    write!(f, "{}", nearest.join(", "))
                }
            }
            RramError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            RramError::IndexOutOfRange {
                row,
                col,
                rows,
                cols,
            } => write!(f, "cell ({row}, {col}) outside {rows}x{cols} array"),
            RramError::ShapeMismatch { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            RramError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            RramError::RootNotBracketed { what, lo, hi } => {
                write!(f, "{what}: target not bracketed on [{lo}, {hi}]")
            }
            RramError::RatioBelowOne(r) => {
                write!(f, "resistance ratio must be >= 1, got {r}")
            }
            RramError::CodeTooLong { n, max } => {
                write!(f, "code length {n} exceeds exact-enumeration limit {max}")
            }
            RramError::ConfigParse { line, message } => {
                write!(f, "config parse error at line {line}: {message}")
            }
        }
    }
}

impl std::error::Error for RramError {}

pub type Result<T> = std::result::Result<T, RramError>;
