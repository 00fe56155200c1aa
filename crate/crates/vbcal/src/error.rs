use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: {msg}")]
    Validation { row: usize, msg: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("degenerate local window at grid point {0}: all local x identical")]
    DegenerateWindow(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("method not applicable: {0}")]
    NotApplicable(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
