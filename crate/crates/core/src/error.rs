use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("constraint {index}: {reason}")]
    InvalidConstraint { index: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Values were tabulated on a different support than the one supplied.
    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("infeasible or unbounded: {0}")]
    Infeasible(String),

    #[error("active-set cycle after {iterations} outer iterations")]
    ActiveSetCycle { iterations: usize },

    #[error("constraint {index}: tabulated function has no derivative")]
    MissingDerivative { index: usize },
}

impl Error {
    /// True for failures of the optimization itself, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::ActiveSetCycle { .. })
    }

    pub(crate) fn constraint(index: usize, reason: impl Into<String>) -> Self {
        Error::InvalidConstraint {
            index,
            reason: reason.into(),
        }
    }
}
