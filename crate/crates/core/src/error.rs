use thiserror::Error;

use crate::fock::Space;

/// Errors shared across the simulation layers.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("invalid dimension {0}: at least 2 oscillator levels are required")]
    InvalidDimension(usize),

    #[error("operator lives on {found:?}, expected {expected:?}")]
    SpaceMismatch { expected: Space, found: Space },

    #[error("matrix dimension {found} does not match the {expected} expected for {space:?}")]
    DimensionMismatch {
        space: Space,
        expected: usize,
        found: usize,
    },

    #[error("Fock level {n} out of range for {levels} levels")]
    FockOutOfRange { n: usize, levels: usize },

    #[error("state validation failed: {0}")]
    InvalidState(String),

    #[error(
        "coherent state |z|={amplitude:.3} has truncated tail mass {tail:.3e} above {threshold:.1e}"
    )]
    CoherentOverflow {
        amplitude: f64,
        tail: f64,
        threshold: f64,
    },

    #[error(
        "truncation overflow at encounter {encounter}: top-level population {tail_mass:.3e} exceeds {threshold:.1e}"
    )]
    TruncationOverflow {
        encounter: usize,
        tail_mass: f64,
        threshold: f64,
    },

    #[error("unstable coupling: normal-mode frequency squared {omega_sq:.6} is not positive")]
    UnstableCoupling { omega_sq: f64 },

    #[error("non-positive probability {value:.3e} at index {index} inside the fit range")]
    NonPositiveProbability { index: usize, value: f64 },

    #[error("need at least {required} records for the fit, got {found}")]
    TooFewRecords { required: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigendecomposition failed: {0}")]
    Eigendecomposition(String),

    #[error("empty ensemble")]
    EmptyEnsemble,
}

pub type Result<T> = std::result::Result<T, CoreError>;
