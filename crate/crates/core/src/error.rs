use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A single malformed record found while reading an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based line number in the source file (0 when the source is not line-oriented).
    pub line: usize,
    /// Field path inside the record, e.g. `instances[0].polygon`.
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(line: usize, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { line, path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.path, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {} malformed record(s):\n{}", source_name, .violations.len(), join_lines(.violations))]
    Schema { source_name: String, violations: Vec<Violation> },

    #[error("invalid polygon: {0}")]
    Polygon(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("word {0:?} contains characters outside the alphabet")]
    OutOfAlphabet(String),

    #[error("duplicate instance id {instance_id:?} in image {image_id:?}")]
    DuplicateInstance { image_id: String, instance_id: String },

    #[error("submission references unknown ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),

    #[error("submission has no prediction for {} word(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),

    #[error("invalid category rule: {0}")]
    Rule(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_lines(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
