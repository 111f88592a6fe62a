use chrono::NaiveDateTime;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("unknown or misplaced column `{0}`")]
    UnknownColumn(String),

    #[error("invariant violated on `{field}`: {detail}")]
    InvariantViolation { field: &'static str, detail: String },

    #[error("duplicate window for {tbs_id} at {window_start}")]
    DuplicateWindow {
        tbs_id: String,
        window_start: NaiveDateTime,
    },

    #[error("no data: {0}")]
    NoData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unstable load: {offered} Erlangs offered to {channels} channels")]
    UnstableLoad { channels: u32, offered: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 1 for runtime conditions.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoData(_) | Error::Io(_) => 1,
            _ => 2,
        }
    }
}
