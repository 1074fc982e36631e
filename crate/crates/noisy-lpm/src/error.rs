//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors surfaced by the library.
///
/// `Config` covers invalid run parameters, `Data` covers unusable inputs
/// (unreadable or malformed files, empty graphs), and `Internal` covers
/// consistency faults that indicate corrupted state rather than bad input.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal consistency fault: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Io { .. } => 3,
            Error::Internal(_) => 4,
        }
    }
}
