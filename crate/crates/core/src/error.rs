use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { u: usize, v: usize },

    #[error("self loop at vertex {0} is not allowed in a simple graph")]
    SelfLoop(usize),

    #[error("input graph contains a cycle")]
    CycleDetected,

    #[error("graph is not connected")]
    Disconnected,

    #[error("invalid matching: vertex {vertex} is covered by more than one edge")]
    InvalidMatching { vertex: usize },

    #[error("inconsistent messages: the edge rule selects two edges at vertex {vertex}")]
    InconsistentMessages { vertex: usize },

    #[error("budget exceeded: {what} needs more than {limit}")]
    Budget { what: String, limit: usize },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("decomposition stalled: no perfect matching on the support (residual {residual:e})")]
    DecompositionStalled { residual: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{failures} oracle mismatches (counterexamples in {dump})")]
    OracleMismatch { failures: usize, dump: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 for bad input, 3 for solver and budget
    /// failures, 4 for oracle mismatches.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. }
            | Error::VertexOutOfRange { .. }
            | Error::DuplicateEdge { .. }
            | Error::SelfLoop(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::Io(_) => 2,
            Error::OracleMismatch { .. } => 4,
            _ => 3,
        }
    }

    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
