use thiserror::Error;

/// Errors surfaced by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {message}")]
    Config { field: &'static str, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("instance validation failed{}: {}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), violations.join("; "))]
    Validation {
        line: Option<usize>,
        violations: Vec<String>,
    },

    #[error("capacity exceeded at offline item {item}")]
    Capacity { item: usize },

    #[error("instance too large for exhaustive search: {combinations} combinations exceed {limit}")]
    Size { combinations: f64, limit: f64 },

    #[error("non-finite value produced by layer {layer}")]
    Numeric { layer: usize },

    #[error("training diverged at epoch {epoch}")]
    Training { epoch: usize },

    #[error("policy load error: {0}")]
    PolicyLoad(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
