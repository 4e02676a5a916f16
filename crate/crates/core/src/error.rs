use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range; `field` names the offending key.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dense eigensolve did not converge at q = {q} (k0 units)")]
    BandNonConvergence { q: f64 },

    #[error("tridiagonal QL iteration did not converge for eigenvalue {index}")]
    QlNonConvergence { index: usize },

    #[error("Bloch phase fixing failed at q = {q}: |phi_q(x0)| = {magnitude:e}")]
    PhaseFixing { q: f64, magnitude: f64 },

    #[error("Wannier window of {sites} sites too small: {reason}")]
    WindowTooSmall { sites: usize, reason: String },

    #[error("operation requires a cavity potential, got Aubry-Andre mode")]
    NotCavityMode,

    #[error("io error at {}: {source}", path.display())]
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

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
