use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape {shape:?} holds {expected} values, got {actual}")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite value at position {index}")]
    NonFiniteInput { index: usize },
    #[error("non-finite intermediate value: {0}")]
    NonFinite(String),
    #[error("input has {actual} features, model expects {expected}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error("cycle detected involving node '{0}'")]
    Cycle(String),
    #[error("invalid node '{node}': {reason}")]
    InvalidNode { node: String, reason: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("method '{method}' does not support op '{op}' (node '{node}')")]
    UnsupportedOp {
        method: String,
        op: String,
        node: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-monotone path: {0}")]
    NonMonotonePath(String),
    #[error("step budget exhausted at m={max_steps}: best gap {best_gap:e} at m={best_steps}")]
    BudgetExhausted {
        max_steps: usize,
        best_steps: usize,
        best_gap: f64,
    },
    #[error("no counterexample for straightline path")]
    NoCounterexample,
}

impl Error {
    /// True for errors caused by arithmetic rather than bad configuration.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
