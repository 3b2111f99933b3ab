//! Crate-wide error type.

/// Errors shared by every numerical module in the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature or root finding exhausted its refinement budget.
    #[error("failed to converge: {0}")]
    NonConvergence(String),

    /// An integral that is provably divergent for the requested exponents.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// A phase-space partition with inconsistent magnetization shifts.
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    /// A grid precondition (resolution, boundary decay, normalization) failed.
    #[error("grid error: {0}")]
    Grid(String),

    /// A conservation diagnostic exceeded its abort threshold during a run.
    #[error("conservation abort: {0}")]
    ConservationAbort(String),

    /// Invalid configuration values.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure while writing result artifacts.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
