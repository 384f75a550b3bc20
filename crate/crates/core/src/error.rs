use thiserror::Error;

use crate::point::Point;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown instance `{name}`; valid names: {}", valid.join(", "))]
    UnknownInstance { name: String, valid: Vec<String> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point has non-finite coordinate at index {index}")]
    NonFinitePoint { index: usize },

    #[error("point {point} is infeasible (violation {violation:.3e})")]
    Infeasible { point: Point, violation: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite objective value at {point}")]
    Numeric { point: Point },

    #[error("config error: {0}")]
    Config(String),

    #[error("generator failed at t = {t}: {reason}")]
    Generator { t: u64, reason: String },

    #[error("instance metadata error: {0}")]
    Metadata(String),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("insufficient data: {usable} usable samples, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("report produced by tool version {found}, this is {expected}")]
    VersionMismatch { found: String, expected: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input (flags, files, parameters)
    /// rather than by a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::UnknownInstance { .. }
                | Error::Dimension { .. }
                | Error::NonFinitePoint { .. }
                | Error::Infeasible { .. }
                | Error::Domain(_)
                | Error::Config(_)
                | Error::Unsupported(_)
                | Error::VersionMismatch { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
