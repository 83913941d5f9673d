use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the engine.
///
/// Variants are grouped by how the CLI reports them: [`Error::is_data_error`]
/// distinguishes bad input from internal failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("missing input file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{file}:{line}: {message}")]
    MalformedRow {
        file: String,
        line: u64,
        message: String,
    },

    #[error("{file}:{line}: duplicate key {key}")]
    DuplicateKey {
        file: String,
        line: u64,
        key: String,
    },

    #[error("{file}:{line}: {entity} references unknown {kind} {key}")]
    DanglingReference {
        file: String,
        line: u64,
        entity: String,
        kind: &'static str,
        key: String,
    },

    #[error("publication {pub_id}: {message}")]
    InvalidPublication { pub_id: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no baseline pool for category {category} in {year}")]
    MissingPool { category: String, year: i32 },

    #[error(
        "category {category} in {year} has zero mean citations but publication {pub_id} is cited"
    )]
    UndefinedBaseline {
        category: String,
        year: i32,
        pub_id: String,
    },

    #[error("subject {0} not present in ranking population")]
    SubjectAbsent(String),

    #[error("value {0} not present in population")]
    ValueAbsent(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("regression needs at least 3 observations, got {0}")]
    TooFewObservations(usize),

    #[error("regression input must be positive, got ({0}, {1})")]
    NonPositiveInput(f64, f64),

    #[error("degenerate design: regressor has zero variance")]
    DegenerateDesign,

    #[error("p-value {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the supplied inputs rather than the engine.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
