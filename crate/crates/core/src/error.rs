use thiserror::Error;

pub type Result<T> = std::result::Result<T, GlmeError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GlmeError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("outside parameter domain: {0}")]
    Domain(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("covariance matrix is not positive definite after regularization")]
    Covariance,

    #[error("design matrix is rank deficient")]
    Design,

    #[error("observation {index} lies outside the GEV support")]
    Support { index: usize },

    #[error("invalid penalty: {0}")]
    Penalty(String),

    /// The optimizer ran out of evaluations without meeting its stopping rule.
    #[error("optimizer did not converge (best objective {objective:.6e} at {best:?})")]
    NonConvergence { best: Vec<f64>, objective: f64 },
}

impl GlmeError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        GlmeError::Input(msg.into())
    }
}
