use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a model invariant; the message names the invariant.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("inversion table error: {0}")]
    Table(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("budget exceeded: K = {k:.3e} > K_max = {k_max:.3e}")]
    Budget { k: f64, k_max: f64 },

    #[error("trial {index} (seed {seed:#018x}) failed: {source}")]
    Trial {
        index: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid user-supplied values rather than I/O
    /// or internal failures.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain(_) | Error::Grid(_) | Error::Budget { .. } | Error::Parse { .. } => true,
            Error::Trial { source, .. } => source.is_domain(),
            _ => false,
        }
    }
}
