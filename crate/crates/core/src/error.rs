use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 2")]
    InvalidDimension(usize),

    #[error("level index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { dim: usize, row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (max |A - A^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("negative rate {rate} for dissipator {index}")]
    NegativeRate { index: usize, rate: f64 },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Lie closure exceeded {max_dim} dimensions")]
    ClosureOverflow { max_dim: usize },

    #[error(
        "degenerate steady state: second-smallest singular value {second:.3e} below {threshold:.3e}"
    )]
    DegenerateSteadyState { second: f64, threshold: f64 },

    #[error("null vector of the Liouvillian has vanishing trace ({0:.3e})")]
    TracelessNullVector(f64),

    #[error("integration produced non-finite entries at t = {t}; reduce dt (currently {dt})")]
    Instability { t: f64, dt: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("phase grid of {given} points is below the required {required}")]
    Resolution { given: usize, required: usize },

    #[error("block weights sum to {0}, expected 1")]
    InvalidWeights(f64),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

pub type Result<T> = std::result::Result<T, Error>;
