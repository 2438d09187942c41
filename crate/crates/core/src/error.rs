use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}; dimension must be at least 1")]
    UnsupportedDimension(usize),

    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {left} vs {right} coordinates")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty ball list")]
    EmptyBallList,

    #[error("size {size} exceeds the enumeration bound {bound}")]
    EnumerationBound { size: usize, bound: usize },

    #[error("edge {{{0}, {0}}} is a self-loop")]
    SelfLoop(usize),

    #[error("graph is not connected")]
    Disconnected,

    #[error("graph is not a tree")]
    NotATree,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("operation requires the {expected} model")]
    ModelMismatch { expected: &'static str },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Negative { name, value })
    }
}

/// Non-fatal conditions attached to a result.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The last retained term of a truncated series is not negligible.
    TruncationTail {
        context: String,
        last_term: f64,
        running_sum: f64,
    },
    /// A convergence criterion does not certify the requested activities.
    CriterionViolated { criterion: String, detail: String },
    /// A Monte Carlo estimate is too noisy to be trusted.
    OracleVariance { detail: String },
}

impl Warning {
    /// Flags a truncation tail when `|last| > threshold * |sum|`.
    pub(crate) fn tail_check(
        context: impl Into<String>,
        last_term: f64,
        running_sum: f64,
        threshold: f64,
    ) -> Option<Warning> {
        (last_term.abs() > threshold * running_sum.abs()).then(|| Warning::TruncationTail {
            context: context.into(),
            last_term,
            running_sum,
        })
    }
}
