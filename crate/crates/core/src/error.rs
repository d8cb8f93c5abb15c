use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Scenario could not be parsed or failed validation. `path` is the
    /// offending field (e.g. `power.bandwidth_total_hz`).
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("user {user} is never inside any satellite's field of view")]
    Coverage { user: usize },

    #[error("demand of user {user} at slot {slot} exceeds the beam-edge link capacity")]
    DemandUnreachable { user: usize, slot: usize },

    #[error(
        "matching instance too large for exact search ({satellites}^{clusters} > {limit:e}); use the relaxed solver"
    )]
    InstanceTooLarge {
        satellites: usize,
        clusters: usize,
        limit: f64,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Coverage { .. } => 1,
            Error::Domain(_) | Error::DemandUnreachable { .. } | Error::InstanceTooLarge { .. } | Error::Solver(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
