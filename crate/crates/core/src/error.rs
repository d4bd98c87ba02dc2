use thiserror::Error;

/// Errors raised by the numerical kernels, the space/method constructors and the analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e} exceeds tolerance {tolerance:e})")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite (pivot {pivot} has value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("linear system is singular (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("{algorithm} did not converge within {iterations} sweeps")]
    NoConvergence { algorithm: &'static str, iterations: usize },

    #[error("basis columns are linearly dependent (singular value ratio {ratio:e})")]
    LinearlyDependent { ratio: f64 },

    #[error("subspace is trivial (dimension 0)")]
    TrivialSubspace,

    #[error("discrete bilinear form is degenerate (singular value ratio {ratio:e})")]
    DegenerateB { ratio: f64 },

    #[error("method is not fully algebraically consistent (residual {residual:e})")]
    InconsistentMethod { residual: f64 },

    #[error("invalid setup: {0}")]
    InvalidSetup(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(expected: impl Into<String>, found: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        expected: expected.into(),
        found: found.into(),
    }
}
