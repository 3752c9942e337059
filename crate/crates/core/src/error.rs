use thiserror::Error;

use crate::optimizer::OptTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("qubit index {index} out of range for {nqubits} qubits{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    QubitRange {
        index: usize,
        nqubits: usize,
        line: Option<usize>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("binding error: {0}")]
    Binding(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{nqubits} qubits is too large for the {method} path (limit {limit})")]
    TooLarge {
        nqubits: usize,
        limit: usize,
        method: &'static str,
    },

    #[error("Lanczos did not converge after {iterations} steps: best estimate {estimate}, residual {residual:e}")]
    Convergence {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("objective returned a non-finite value after {} iterations", trace.records.len().saturating_sub(1))]
    NonFiniteObjective { trace: Box<OptTrace> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
