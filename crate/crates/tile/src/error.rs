use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TileError {
    InvalidConfig(String),
    /// A layer does not fit the selected dataflow; names the violated bound.
    CapacityExceeded {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    LengthMismatch {
        expected: usize,
        got: usize,
    },
    /// A partial popcount exceeded the counter range (strict counter mode
    /// saturates instead of reporting this).
    CounterOverflow {
        value: u32,
        max: u32,
    },
}

impl fmt::Display for TileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TileError::InvalidConfig(msg) => write!(f, "invalid tile config: {msg}"),
            TileError::CapacityExceeded {
                what,
                needed,
                available,
            } => write!(f, "{what}: layer needs {needed}, dataflow offers {available}"),
            TileError::LengthMismatch { expected, got } => {
                write!(f, "input length {got} does not match layer fan-in {expected}")
            }
            TileError::CounterOverflow { value, max } => write!(
                f,
                "partial popcount {value} overflows the {max}-max counter; widen partial_counter_bits"
            ),
        }
    }
}

impl std::error::Error for TileError {}

pub type Result<T> = std::result::Result<T, TileError>;
