use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("journal error: {0}")]
    Journal(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Why an image was not admitted to the queue.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IntakeError {
    #[error("filename `{0}` does not start with the configured prefix")]
    PrefixMismatch(String),
    #[error("file already ingested")]
    Duplicate,
    #[error("service is shutting down")]
    ShuttingDown,
    #[error("cannot spool image: {0}")]
    Spool(String),
}
