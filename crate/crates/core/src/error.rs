use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Ingest {
        path: String,
        row: u64,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate asset {ticker}: zero variance in window ending at t={t}")]
    DegenerateAsset { ticker: String, t: usize },

    #[error("degenerate portfolio: return series has zero variance")]
    DegeneratePortfolio,

    #[error("empty slice: {0}")]
    EmptySlice(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Io { .. }
            | Error::Ingest { .. }
            | Error::DegenerateAsset { .. }
            | Error::DegeneratePortfolio
            | Error::EmptySlice(_)
            | Error::InsufficientData(_) => ErrorKind::Data,
            Error::Numerical(_) => ErrorKind::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
