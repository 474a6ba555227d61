//! Crate-wide error type.

use thiserror::Error;

/// Errors raised when constructing domain values or calling operations
/// with inconsistent arguments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An operand's length does not match the rest of the instance.
    #[error("dimension mismatch in {operand}: expected {expected}, got {actual}")]
    DimensionMismatch {
        operand: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A configuration value violates its invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A beam entry's magnitude violates the mode's modulus constraint.
    #[error("{mode} beam entry {index} has modulus {modulus}, expected {expected}")]
    ModulusViolation {
        mode: &'static str,
        index: usize,
        modulus: f64,
        expected: f64,
    },

    /// An effective channel gain is NaN and cannot be ordered.
    #[error("effective gain for user {0} is NaN")]
    NanGain(usize),

    /// A steering angle cosine lies outside [-1, 1].
    #[error("cos(angle) {0} lies outside [-1, 1]")]
    AngleOutOfRange(f64),

    /// A user distance lies outside the sampling range.
    #[error("distance {0} m lies outside the sampling range [10, 500] m")]
    DistanceOutOfRange(f64),

    /// A power-shift was requested for a user with no rate slack.
    #[error("no rate slack at position {position}: rate {rate} does not exceed target {target}")]
    NoSlack {
        position: usize,
        rate: f64,
        target: f64,
    },

    /// An exhaustive search would exceed its evaluation budget.
    #[error("phase search would evaluate {candidates:.0} beams, over the {limit:.0} budget")]
    SearchBudgetExceeded { candidates: f64, limit: f64 },

    /// A power value is negative.
    #[error("negative power {power} at position {position}")]
    NegativePower { position: usize, power: f64 },

    /// Allocated powers exceed the total budget.
    #[error("allocated total {total} exceeds the power budget {budget}")]
    OverBudget { total: f64, budget: f64 },
}
