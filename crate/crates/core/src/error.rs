use thiserror::Error;

/// Errors emitted by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree {found} is too low, need at least {min}")]
    DegreeTooLow { found: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("non-positive mass entry {value} at index {index}")]
    NonPositiveMass { index: usize, value: f64 },

    #[error("non-positive diagonal entry {value} at index {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("matrix is singular (pivot {pivot} at step {step})")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("degenerate domain: edge length {0} in direction {1}")]
    DegenerateDomain(f64, usize),

    #[error("negative Helmholtz parameter {0} is outside the supported regime")]
    NegativeHelmholtzParameter(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("memory estimate {required} bytes exceeds configured cap {cap} bytes")]
    MemoryCapExceeded { required: u64, cap: u64 },

    #[error("eigensolver failed to converge within {0} sweeps")]
    EigenNoConvergence(usize),
}
