use thiserror::Error;

/// Errors produced by the model, engine, solver and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition (bad bond index, wrong lattice size, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid user-supplied data (profile values outside [0,1], CFL violation, ...).
    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical instability at t={time}: node {node} has value {value}")]
    NumericalInstability { time: f64, node: usize, value: f64 },

    #[error("insufficient density: window holds {found} helper particle(s), need 2")]
    InsufficientDensity { found: usize },

    /// A configuration file or command line could not be turned into a run.
    #[error("usage error in `{key}`: {message}")]
    Usage { key: String, message: String },

    #[error("absorbed at t={time}: no transition has positive rate")]
    Absorbed { time: f64 },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn usage(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Usage {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::Input(_) => "input",
            Error::NumericalInstability { .. } => "numerical_instability",
            Error::InsufficientDensity { .. } => "insufficient_density",
            Error::Usage { .. } => "usage",
            Error::Absorbed { .. } => "absorbed",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
