use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("UE {ue} is {distance:.3} m from AP {ap}, below the {min_distance} m minimum")]
    TooClose {
        ue: usize,
        ap: usize,
        distance: f64,
        min_distance: f64,
    },

    #[error("disk centered at ({0}, {1}) with radius {2} m does not reach the deployment area")]
    DiskOutsideArea(f64, f64, f64),

    #[error("value {value} is not a member of the {set} set")]
    NotInSet { set: &'static str, value: String },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("{path}: line {line}: {msg}")]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: unsupported schema version {found} (expected {expected})")]
    SchemaVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad category, used by the command line front-end to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Dimension(_) => ErrorKind::Dimension,
            Error::Malformed { .. } | Error::SchemaVersion { .. } => ErrorKind::Data,
            _ => ErrorKind::Config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Dimension,
    Data,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
