use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: value {value} is outside 0..{cardinality}")]
    MalformedValue {
        line: usize,
        value: String,
        cardinality: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("degenerate probability table: {0}")]
    DegenerateTable(String),

    #[error("probability table does not sum to one (sum = {0})")]
    NotNormalized(f64),

    #[error("observation is missing a value for variable {0}")]
    MissingValue(usize),

    #[error("enumeration over {states} joint states exceeds the limit of {limit}")]
    EnumerationTooLarge { states: u128, limit: u128 },

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("model file schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 1 = usage/configuration, 2 = data or file problem, 3 = numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Numerical(_) | Error::DegenerateTable(_) => 3,
            _ => 2,
        }
    }
}
