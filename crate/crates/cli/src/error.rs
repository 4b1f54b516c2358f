use std::fmt;

use glme::error::GlmeError;

/// Failure of a subcommand, carrying the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad file, flag or configuration value. Exit code 1.
    Input(String),
    /// An optimizer stopped before meeting its convergence rule. Exit code 2.
    NonConvergence(String),
    /// Numerical breakdown inside an estimator. Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::NonConvergence(m) => write!(f, "did not converge: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<GlmeError> for CliError {
    fn from(e: GlmeError) -> Self {
        let msg = e.to_string();
        match e {
            GlmeError::NonConvergence { .. } => CliError::NonConvergence(msg),
            GlmeError::Covariance => CliError::Numerical(msg),
            GlmeError::Input(_)
            | GlmeError::Domain(_)
            | GlmeError::Degenerate(_)
            | GlmeError::Design
            | GlmeError::Support { .. }
            | GlmeError::Penalty(_) => CliError::Input(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
