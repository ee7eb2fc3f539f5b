use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A parameter left the admissible range during estimation.
    #[error("parameter {index} diverged (|theta| = {value} > guard {guard})")]
    Divergence { index: usize, value: f64, guard: f64 },

    /// The observed statistics sit on the boundary of the achievable set.
    #[error("maximum likelihood estimate does not exist: {0}")]
    Nonexistence(String),

    #[error("state space too large for enumeration: {sites} sites (limit {limit})")]
    TooLarge { sites: usize, limit: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
