//! Matrix and image ingestion, factor persistence and trace emission.
//!
//! Text formats print floats with 17 significant digits so that every
//! text round trip is exact for 64-bit values; the factor container is
//! binary and checksummed.

mod csv;
mod factors;
mod matrix_market;
mod pgm;
mod trace;

pub use csv::{read_matrix_csv, write_matrix_csv};
pub use factors::{read_factors, write_factors};
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use pgm::{read_pgm, write_pgm, PgmEncoding};
pub use trace::{read_trace_json, write_trace, TraceFormat};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error("{path}: unsupported factor file version {found} (expected {expected})")]
    VersionMismatch {
        path: String,
        found: u32,
        expected: u32,
    },

    #[error("{path}: checksum mismatch, file is corrupt")]
    ChecksumMismatch { path: String },

    #[error(transparent)]
    Core(#[from] crate::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

pub(crate) fn io_err(path: &std::path::Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.display().to_string(),
        source,
    }
}

/// Formats a float with 17 significant digits (exact text round trip).
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
