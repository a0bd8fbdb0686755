use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument is outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration is internally inconsistent (bad grid sizes, steps
    /// that do not divide the horizon, and so on).
    #[error("config error: {0}")]
    Config(String),

    /// Input data could not be parsed as the expected format.
    #[error("format error: {0}")]
    Format(String),

    /// The requested readout needs data the solve was not asked to retain.
    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
