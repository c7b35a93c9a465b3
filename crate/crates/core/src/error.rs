use thiserror::Error;

/// Errors produced by the tensor algebra, the proximal machinery and the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: String },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("mode pair index q={q} out of range 1..={max} for a tensor of order {order}")]
    PairOutOfRange { q: usize, max: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SVD did not converge on Fourier slice {slice}")]
    SvdFailed { slice: usize },

    #[error("fixed-point iteration did not converge for y={y} after {iterations} iterations")]
    ProxNotConverged { y: f64, iterations: usize },

    #[error("non-finite value encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("reference slice {slice} has zero mean")]
    ZeroMeanSlice { slice: usize },

    #[error("npy format error: {0}")]
    Npy(String),

    #[error("expected dtype {expected}, found {actual}")]
    DtypeMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SvdFailed { .. } | Error::ProxNotConverged { .. } | Error::NonFinite { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
