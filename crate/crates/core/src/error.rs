//! Error type shared by all simulation and estimation modules.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while configuring or running a simulation.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A configuration struct violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A single operation parameter is out of its legal range.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// A quadrature grid is too coarse or too narrow for the requested
    /// tolerance.
    #[error("quadrature accuracy: {0}")]
    Accuracy(String),

    /// Too few trajectories for a statistically meaningful estimate.
    #[error("insufficient statistics: {0}")]
    Statistics(String),

    /// The calibration solver could not meet its anchor points.
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn accuracy(msg: impl Into<String>) -> Self {
        Error::Accuracy(msg.into())
    }

    pub(crate) fn statistics(msg: impl Into<String>) -> Self {
        Error::Statistics(msg.into())
    }
}
