use thiserror::Error;

/// Errors produced by the geometry, kernel, determinant and sampling layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the admissible chart: {0}")]
    ChartViolation(String),

    #[error("operation requires a global model (sphere or flat torus)")]
    LocalOnlyModel,

    #[error("operation not supported for this surface model: {0}")]
    UnsupportedModel(String),

    #[error("quadrature grid resolution {got} below the sufficiency bound {required}")]
    InsufficientResolution { got: usize, required: usize },

    #[error("theta truncation {got} too small, lattice terms up to |n| = {required} are needed")]
    InsufficientTruncation { got: usize, required: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is numerically singular at pivot {0}")]
    Singular(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("decay fit window invalid: {0}")]
    FitWindow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
