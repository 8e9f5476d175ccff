use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("cohort is empty")]
    EmptyCohort,

    #[error("sampling support is empty (total weight is zero)")]
    EmptySupport,

    #[error("kernel is degenerate: total weight is zero at event {event}")]
    DegenerateKernel { event: u64 },

    #[error("distance is undefined: the distributions share no nonempty bin")]
    UndefinedDistance,

    #[error("binning scheme mismatch: {0}")]
    SchemeMismatch(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// The innermost error, looking through replicate wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Replicate { source, .. } => source.root(),
            other => other,
        }
    }
}
