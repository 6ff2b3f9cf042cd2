//! Experiment harness around the `qpeig` solver library: config-driven
//! solves, parameter sweeps, coefficient-decay curves, physical field
//! emission, and eigenvalue validation.

pub mod artifacts;
pub mod commands;
pub mod config;

/// Command-line failure classified by exit status: configuration problems
/// exit with 2, numerical failures with 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self::Numerical(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "config error: {msg}"),
            Self::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qpeig::Error> for CliError {
    fn from(e: qpeig::Error) -> Self {
        match e {
            qpeig::Error::SolverFailure(_) | qpeig::Error::Indefinite(_) => {
                Self::Numerical(e.to_string())
            }
            other => Self::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Config(format!("i/o error: {e}"))
    }
}
