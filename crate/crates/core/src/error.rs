use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Non-finite values or a monitored quantity drifted past its guard.
    #[error("numerical abort: {0}")]
    Numerical(String),
    /// A quadrature would need more points than allowed.
    #[error("resolution budget exceeded: {needed} points needed, budget is {budget}")]
    Budget { needed: u64, budget: u64 },
}

impl Error {
    /// True for errors caused by bad inputs rather than by the numerics.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Invalid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
