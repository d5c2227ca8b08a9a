use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single rejected row of a tabular input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowDiagnostic {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    pub field: String,
    pub message: String,
}

impl fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, field `{}`: {}", self.line, self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("grade 6 (untreatable) is excluded; grades must lie in 0..=5")]
    UntreatableGrade,

    #[error("grade {0} outside 0..=5")]
    InvalidGrade(i64),

    #[error("triple ({0},{1},{2}) is not sorted in descending order")]
    UnsortedTriple(u8, u8, u8),

    #[error("unknown body region `{0}`")]
    UnknownRegion(String),

    #[error("change {change} is invalid for {triple}: position {position} would become {value}")]
    InvalidChange {
        triple: String,
        change: String,
        position: char,
        value: i32,
    },

    #[error("malformed aggregator `{name}`: {reason}")]
    MalformedAggregator { name: String, reason: String },

    #[error("insufficient sample: need at least {needed} values, got {got}")]
    InsufficientSample { needed: usize, got: usize },

    #[error("correlation undefined: {0} coordinate has zero variance")]
    UndefinedCorrelation(&'static str),

    #[error("normalized mutual information undefined: both marginals are constant")]
    UndefinedNmi,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{} rejected row(s) in {}:\n{}", .diagnostics.len(), .path.display(), join_lines(.diagnostics))]
    InvalidRows {
        path: PathBuf,
        diagnostics: Vec<RowDiagnostic>,
    },

    #[error("reproduction of table `{table}` differs from the golden copy:\n{diff}")]
    GoldenMismatch { table: String, diff: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the environment (missing files, unreadable
    /// streams) as opposed to rejected content.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => e.is_io_error(),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn join_lines(diags: &[RowDiagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}
