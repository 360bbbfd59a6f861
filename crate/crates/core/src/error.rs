use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the model, the solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Both users consume no energy and compute no bits, so the CE ratio is 0/0.
    #[error("no activity: total energy and total computed bits are both zero")]
    NoActivity,

    #[error("surrogate log argument {argument} is not positive for user {user}")]
    SurrogateDomain { user: usize, argument: f64 },

    #[error("unbounded direction in {what}: denominator {denominator}")]
    UnboundedDirection { what: &'static str, denominator: f64 },

    #[error("inconsistent backscatter power: q = {q} with incident power {incident}")]
    Inconsistent { q: f64, incident: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
