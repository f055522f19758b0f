use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },

    #[error("domain too small: {count} locations (need at least 2)")]
    DomainTooSmall { count: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell {cell} is infeasible: {reason}")]
    CellInfeasible { cell: usize, reason: String },

    #[error("degenerate protection set containing location {member}: diameter is zero")]
    DegeneratePls { member: u32 },

    #[error("pseudo-location {id} is unreachable under the mechanism")]
    UnreachableOutput { id: u32 },

    #[error("no idle workers available for task {task}")]
    NoWorker { task: u32 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("schema mismatch in {path}: {message}")]
    Schema { path: String, message: String },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("io error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag used in the CLI's structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::DomainTooSmall { .. } => "domain_too_small",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::CellInfeasible { .. } => "cell_infeasible",
            Error::DegeneratePls { .. } => "degenerate_pls",
            Error::UnreachableOutput { .. } => "unreachable_output",
            Error::NoWorker { .. } => "no_worker",
            Error::Invariant(_) => "invariant",
            Error::Schema { .. } => "schema",
            Error::MissingFile(_) => "missing_file",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
