use thiserror::Error;

/// Errors produced by construction and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Leg bookkeeping violation: duplicate labels, missing legs, dimension
    /// or kind mismatch between operators.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid caller-supplied parameter (q = 0, nonpositive step, ...).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Requested system exceeds the dense-storage cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Singular matrix, or condition estimate above the inversion threshold.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Gauss factorization hit a singular corner block.
    #[error("factorization degeneracy: {0}")]
    Degenerate(String),

    /// Non-finite entries or a numerical routine that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Unknown suite or observable name.
    #[error("unknown name: {0}")]
    Unknown(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
