use thiserror::Error;

/// Errors raised by the simulation kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// System size outside the range a kernel supports.
    #[error("invalid system size N = {n}: {reason}")]
    InvalidSystemSize { n: usize, reason: &'static str },

    /// A parameter lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Block sizes or site partitions that do not fit the system.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// An eigensolver, integrator or estimator failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Two inputs that must share a shape or grid do not.
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
