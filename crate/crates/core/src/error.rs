use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{what} index {index} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    /// Normal equations too ill-conditioned to trust (collinear anchors).
    #[error("degenerate geometry (condition number {condition:.3e})")]
    DegenerateGeometry { condition: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) | Error::OutOfRange { .. } | Error::DegenerateGeometry { .. } => 2,
            Error::Json(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io(_) => 1,
        }
    }
}
