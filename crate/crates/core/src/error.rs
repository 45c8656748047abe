//! Error and warning types shared across the crate.

use thiserror::Error;

/// Fatal simulation errors. Every variant names the violated invariant.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("Fock dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error(
        "thermal tail {deficit:.3e} exceeds {limit:.3e}: dim {dim} too small for nbar {nbar}"
    )]
    Truncation {
        deficit: f64,
        limit: f64,
        dim: usize,
        nbar: f64,
    },

    #[error("density matrix not Hermitian: max |rho - rho^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("density matrix trace {trace:.12} outside tolerance of 1")]
    BadTrace { trace: f64 },

    #[error("density matrix lost positivity: smallest eigenvalue {min_eigenvalue:.3e}")]
    Positivity { min_eigenvalue: f64 },

    #[error("post-selection probability {prob:.3e} below 1e-12: selection annihilated the state")]
    DegenerateSelection { prob: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value {value} not on the sweep grid; available: {available}")]
    OffGrid { value: f64, available: String },
}

/// Non-fatal diagnostics. Recorded in trace metadata rather than aborting.
#[derive(Debug, Clone, PartialEq)]
pub enum SimWarning {
    /// The truncated basis is too small for the operators or states in play.
    Truncation { context: String, magnitude: f64 },
    /// Coupling magnitude outside the validated regime |g| <= 1.
    CouplingOutsideValidatedRange { magnitude: f64 },
}

impl std::fmt::Display for SimWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimWarning::Truncation { context, magnitude } => {
                write!(f, "truncation warning: {context} (magnitude {magnitude:.3e})")
            }
            SimWarning::CouplingOutsideValidatedRange { magnitude } => {
                write!(f, "|g| = {magnitude:.3} outside the validated range [0, 1]")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
