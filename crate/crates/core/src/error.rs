use std::path::PathBuf;

/// Errors raised anywhere in the library.
///
/// The pipeline maps these onto process exit codes, see [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator does not commute with the symmetry generator (max |[H, P]| entry = {max_entry:.3e})")]
    NonCommuting { max_entry: f64 },

    #[error("{what} needs {requested} entries, above the configured cap of {cap}; raise the cap or shrink the problem")]
    ResourceCap {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("eigensolver failed: {0}")]
    EigenSolve(String),

    #[error("polynomial unfolding of degree {degree} is not monotone on the spectrum range; try a lower degree")]
    NonMonotoneFit { degree: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("duplicate points at index pairs {0:?}")]
    DuplicatePoints(Vec<(usize, usize)>),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("at {point}: {source}")]
    AtPoint {
        point: String,
        #[source]
        source: Box<Error>,
    },

    /// A failure re-raised from a manifest record.
    #[error("{message}")]
    Recorded { code: i32, message: String },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 config, 3 numerical, 4 resource cap, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::ResourceCap { .. } => 4,
            Error::AtPoint { source, .. } => match source.exit_code() {
                4 => 4,
                _ => 3,
            },
            Error::Recorded { code, .. } => *code,
            Error::InvalidParams(_) => 2,
            Error::Io { .. } | Error::Format { .. } => 1,
            _ => 3,
        }
    }
}
