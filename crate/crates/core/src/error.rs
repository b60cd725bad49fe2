use alloc::string::String;

/// Errors reported by the exponent engines and the simulator.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("row {row} sums to {sum}, expected 1")]
    NotNormalized { row: usize, sum: f64 },

    #[error("entry {index} of row {row} is invalid: {value}")]
    InvalidEntry { row: usize, index: usize, value: f64 },

    #[error("empty distribution")]
    Empty,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("marginal mismatch: L-inf distance {distance} exceeds tolerance {tolerance}")]
    MarginalMismatch { distance: f64, tolerance: f64 },

    #[error("no coupling within tolerance {tolerance}; widen the marginal tolerance or refine the grid")]
    EmptyCouplings { tolerance: f64 },

    #[error("composition is not an n-type: n * q[{symbol}] = {value} is not an integer")]
    NonIntegralType { symbol: usize, value: f64 },

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),
}

pub type Result<T> = core::result::Result<T, Error>;
