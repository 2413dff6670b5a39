use serde::Serialize;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] ertl_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn usage(msg: impl Into<String>) -> Self {
        LabError::Usage(msg.into())
    }

    /// `1` for bad input, `2` for numerical breakdown.
    pub fn exit_code(&self) -> u8 {
        use ertl_core::Error as E;
        match self {
            LabError::Core(
                E::InvalidSpec(_)
                | E::InvalidSupport
                | E::IndexOutOfTable { .. }
                | E::DepthExceeded { .. }
                | E::NotSymmetricState { .. }
                | E::NotToeplitz { .. }
                | E::VerblunskyOutOfDisk { .. },
            ) => 1,
            LabError::Core(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Usage(_) => "usage",
            LabError::Core(_) if self.exit_code() == 1 => "validation",
            LabError::Core(_) => "numerical",
            LabError::Io(_) => "io",
            LabError::Json(_) => "json",
            LabError::Csv(_) => "csv",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            detail: match self {
                LabError::Core(e) => Some(format!("{e:?}")),
                _ => None,
            },
            exit_code: self.exit_code(),
        }
    }
}

/// Printed as JSON on stderr when a run fails.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub exit_code: u8,
}
