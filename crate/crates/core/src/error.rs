use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("registry error: {0}")]
    Registry(String),
    #[error("unknown mode: {0}")]
    UnknownMode(String),
    #[error("probe state at truncation boundary: {0}")]
    Boundary(String),
    #[error("degenerate state: {0}")]
    DegenerateState(String),
    #[error("capacity exceeded: basis dimension {dimension} > cap {cap}")]
    Capacity { dimension: usize, cap: usize },
    #[error("model error: {0}")]
    Model(String),
    #[error("accuracy error: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { estimate: f64, tolerance: f64 },
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("scenario error: {0}")]
    Scenario(String),
}

impl Error {
    /// True for failures that come from running a computation rather than
    /// from a malformed input.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::Capacity { .. } | Error::Accuracy { .. } | Error::Convergence(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
