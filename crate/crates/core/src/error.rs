use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative Frobenius asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("Hermitian eigen-solver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("objective is not finite anywhere on the search domain")]
    NonFiniteObjective,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
