use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("not converged after {passes} passes (residual {residual:e} > {epsilon:e})")]
    NotConverged {
        passes: usize,
        residual: f64,
        epsilon: f64,
    },

    #[error("weight iterate collapsed to the zero vector")]
    ZeroIterate,

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("graph is not regular on the pattern side")]
    IrregularGraph,

    #[error("exhaustive check over subsets of size {size} exceeds the budget of {budget}")]
    BudgetExceeded { size: usize, budget: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{context}: {source}")]
    Stage {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Attach experiment coordinates (scenario, ensemble member, stage) to an error.
    pub fn in_stage(self, context: impl Into<String>) -> Self {
        Error::Stage {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any stage context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
