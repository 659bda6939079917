use thiserror::Error;

/// Errors raised by the solvers and the configuration layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("bias b = {b} is infeasible: 2b = {two_b} exceeds phi(1) = {phi_one}")]
    InfeasibleBias { b: f64, two_b: f64, phi_one: f64 },

    #[error("no root of phi(mu) = {target} on [0, 1]")]
    NoRoot { target: f64 },

    #[error("silence has probability zero (denominator {denominator:e})")]
    DegenerateSilence { denominator: f64 },

    #[error("protocol infeasible: {reason}")]
    InfeasibleProtocol { reason: String },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
