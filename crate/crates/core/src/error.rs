use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// A run configuration is inconsistent (e.g. `T` is not a multiple of `dt`).
    #[error("configuration error: {0}")]
    Config(String),
    /// The implicit system could not be factorized.
    #[error("solver failure: {0}")]
    Solver(String),
    /// An iterative oracle stopped before reaching its tolerance.
    #[error("refinement did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    NotConverged { achieved: f64, requested: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
