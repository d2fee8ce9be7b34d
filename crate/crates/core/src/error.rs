use thiserror::Error;

/// Errors raised by solvers, operators, and problem builders.
#[derive(Debug, Error)]
pub enum PdfpError {
    /// A scalar argument was outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A solver or sampler was configured in a way that violates the
    /// convergence conditions it is supposed to run under.
    #[error("configuration error: {0}")]
    Config(String),

    /// Step-size validation failed; the message names the violated bound.
    #[error("{0}")]
    StepSizeBound(String),

    /// Power iteration did not converge; the last Rayleigh estimate is kept
    /// so callers can decide whether it is still usable.
    #[error("power iteration did not converge within {max_iter} iterations (last estimate {last_estimate})")]
    PowerIteration { max_iter: usize, last_estimate: f64 },

    /// The iterate norm blew past the divergence guard, which signals a
    /// step-size or operator-norm bug rather than a hard problem.
    #[error("iterates diverged at iteration {iter}: |u| = {norm:.3e} exceeds {bound:.3e}")]
    Divergence { iter: usize, norm: f64, bound: f64 },

    /// An agent asked for a neighbor message that was never published.
    #[error("protocol error: agent {agent} has no mailbox entry from neighbor {neighbor}")]
    MissingMailbox { agent: usize, neighbor: usize },

    /// Graph validation failed (self loop, duplicate edge, disconnected, ...).
    #[error("invalid graph: {0}")]
    Graph(String),

    /// Text-format parse failure with source location.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, PdfpError>;

impl PdfpError {
    pub(crate) fn parameter(name: &'static str, reason: impl Into<String>) -> Self {
        PdfpError::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        PdfpError::Shape {
            context,
            expected,
            actual,
        }
    }
}
