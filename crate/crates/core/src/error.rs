use num_complex::Complex64;
use thiserror::Error;

/// Failures shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The orbit of `point` was not certified to enter an attracting petal
    /// within `steps` iterations; the point may lie outside int K.
    #[error("not certified: orbit of {point} did not reach a petal trap within {steps} steps")]
    NotCertified { point: Complex64, steps: usize },

    /// An iterative method stopped before reaching its tolerance.
    #[error("precision error in {what}: achieved residual {residual:e}")]
    Precision { what: &'static str, residual: f64 },

    /// A computation would need more levels or iterations than were made available.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A validation sweep found a configuration violating the claimed constants.
    #[error("validation failure: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
