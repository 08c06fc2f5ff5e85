use thiserror::Error;

/// Errors raised by the solvers, oracles and audits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters (sizes, orders, ranges) supplied by the caller.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Evaluation at a source point or pole.
    #[error("singularity: {0}")]
    Singularity(String),
    /// A quadrature or iteration failed to stabilize.
    #[error("accuracy error: {0}")]
    Accuracy(String),
    /// A map derivative was requested on a measure-zero interface.
    #[error("interface error: {0}")]
    Interface(String),
    /// A piecewise map could not be inverted at a point.
    #[error("map not invertible: {0}")]
    NotInvertible(String),
    /// A solver residual certificate exceeded its gate.
    #[error("certificate {certificate:.3e} exceeds gate {gate:.3e}")]
    Certificate { certificate: f64, gate: f64 },
    /// Broken internal construction invariant.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
