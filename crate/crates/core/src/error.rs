use thiserror::Error;

/// Errors produced by the certificate, spectral, simulation and analysis layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An internal cross-check failed; this signals a bug, not bad input.
    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),

    /// The eigensolver did not reach its tolerance.
    #[error("eigenvalue iteration did not converge within {max_iterations} iterations")]
    NoConvergence { max_iterations: usize },

    /// Time step exceeds the stability limit of the explicit scheme.
    #[error("CFL violation: dt = {dt:e} exceeds the stable limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    /// Evaluated damping left the declared bounds during stepping.
    #[error("damping value {value} at node {node} (t = {t}) outside declared bounds [{lo}, {hi}]")]
    DampingOutOfBounds {
        value: f64,
        node: usize,
        t: f64,
        lo: f64,
        hi: f64,
    },

    /// Too few usable samples for a rate fit.
    #[error("insufficient samples for rate fit: {available} usable, {needed} required")]
    InsufficientSamples { available: usize, needed: usize },

    /// An operation that needs trace data received none.
    #[error("empty energy trace")]
    EmptyTrace,
}

pub type Result<T> = std::result::Result<T, Error>;
