use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("non-finite value at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },
    #[error("all {0} restarts failed: {1}")]
    RestartsExhausted(usize, String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
