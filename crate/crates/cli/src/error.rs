use std::path::PathBuf;

use grushin_core::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// A space-spec problem anchored to a JSON field and, when known, a line.
    #[error("{file}: {field}: {message}")]
    Spec { file: String, field: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec { .. } | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Geom(e) => match e {
                GeomError::DimensionMismatch { .. }
                | GeomError::NonFinite { .. }
                | GeomError::EmptySingularSet
                | GeomError::InvalidPrimitive { .. }
                | GeomError::InvalidParameter { .. }
                | GeomError::OutsideWindow { .. }
                | GeomError::ShortPolyline
                | GeomError::UnsupportedDimension(_) => 2,
                _ => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
