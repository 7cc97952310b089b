// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("Fock truncation too small: tail mass {tail:.3e} beyond level {last_level} exceeds {threshold:.1e}")]
    Truncation {
        tail: f64,
        last_level: usize,
        threshold: f64,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bath mode index {k} out of range 1..={max}")]
    ModeIndexOutOfRange { k: usize, max: usize },

    #[error("Fock level {level} out of range for dimension {dim}")]
    LevelOutOfRange { level: usize, dim: usize },

    #[error("vector length {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("steps per period {0} is below the minimum of 100")]
    StepCountTooSmall(usize),

    #[error("step-doubling deviation {deviation:.3e} exceeds tolerance {tolerance:.1e}")]
    NonConvergence { deviation: f64, tolerance: f64 },

    #[error("eigensolver failed to converge for a {dim}x{dim} block after {iterations} iterations")]
    EigensolveFailure { dim: usize, iterations: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("Wigner value at ({q}, {p}) has imaginary residue {residue:.3e}")]
    ImaginaryResidue { q: f64, p: f64, residue: f64 },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
