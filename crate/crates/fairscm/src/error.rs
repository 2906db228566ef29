//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, fitting, metrics, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A structural model failed validation. Each entry names the offending
    /// node and the violated rule.
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    /// A caller referenced a node that does not exist in the model.
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    /// Exact enumeration was requested for a model it cannot handle.
    #[error("cannot enumerate worlds: {0}")]
    NotEnumerable(String),

    /// An input value or argument is outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Dataset columns disagree with what an operation expects.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A prediction-time row carries a group label never seen during fitting.
    #[error("unseen group `{0}` at prediction time")]
    UnseenGroup(String),

    /// A group's label distribution is degenerate (zero spread).
    #[error("group `{0}` has zero standard deviation")]
    DegenerateGroup(String),

    /// The linear system of an M-step or least-squares fit is singular.
    #[error("singular system while fitting `{0}`")]
    SingularSystem(String),

    /// Experiment configuration is inconsistent or incomplete.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 for filesystem trouble, 1 for
    /// config/validation problems (including malformed JSON or CSV content).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
