use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Peak thermal + backaction displacement never rises above the imprecision floor.
    #[error(
        "resonance not resolved: peak driven displacement {peak_sxx:.3e} m²/Hz is below imprecision {s_imp:.3e} m²/Hz"
    )]
    UnresolvedResonance { peak_sxx: f64, s_imp: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("schema mismatch in {path}: {reason}")]
    Schema { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Schema { .. } => 2,
            Error::UnresolvedResonance { .. } => 3,
            Error::Csv(e) if !e.is_io_error() => 2,
            Error::Json(e) if !e.is_io() => 2,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 4,
        }
    }
}
