//! Error type shared by all byzfuse-core modules.

use thiserror::Error;

/// Errors produced by fusion, simulation and exact-enumeration operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric argument fell outside its documented range.
    #[error("{name} = {value} outside valid range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    /// Two bit-vectors that must have equal length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A matrix/sequence/prior dimension does not match the expected one.
    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An explicit prior with no entries.
    #[error("explicit prior has no entries")]
    EmptyPrior,

    /// Explicit prior probabilities are negative or do not sum to one.
    #[error("explicit prior probabilities sum to {sum}, expected 1 within 1e-9")]
    PriorNotNormalized { sum: f64 },

    /// Fixed-count Byzantine number out of range.
    #[error("k = {k} out of range for n = {n} nodes")]
    KOutOfRange { k: usize, n: usize },

    /// Window length exceeds the exact-fusion enumeration bound.
    #[error("T = {t} exceeds the exact-fusion enumeration bound of {max}")]
    EnumerationBound { t: usize, max: usize },

    /// Instance too large for the exact error-probability oracle.
    #[error("exact enumeration infeasible: n*T = {nt} (max 16) with T = {t} (max 8)")]
    ExactBound { nt: usize, t: usize },

    /// A scenario or run configuration field is invalid.
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
}

impl Error {
    /// True for errors caused by an instance exceeding an enumeration bound
    /// (as opposed to malformed configuration).
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::EnumerationBound { .. } | Error::ExactBound { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
