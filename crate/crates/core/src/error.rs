//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a special function.
    #[error("{function}: argument {value} outside the domain")]
    Domain { function: &'static str, value: f64 },

    #[error("component {index} is not strictly positive (value {value})")]
    ZeroComponent { index: usize, value: f64 },

    #[error("composition sums to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("a composition needs at least 2 components, got {0}")]
    TooFewComponents(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} components")]
    BadIndex { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("insufficient observations: need at least {needed}, got {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("matrix is numerically singular: {0}")]
    Singular(&'static str),

    /// The restricted fit beat the unrestricted one by more than rounding slack.
    #[error("optimizer failure: likelihood-ratio statistic {statistic} is negative")]
    NegativeStatistic { statistic: f64 },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("tree syntax error at byte {position}: {message}")]
    TreeSyntax { position: usize, message: String },

    /// Failure inside the fit of one subtree of a nesting tree.
    #[error("subtree {node}: {source}")]
    Subtree {
        node: String,
        #[source]
        source: Box<Error>,
    },

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("group `{0}` has no observations")]
    EmptyGroup(String),

    #[error("simulation aborted: {failed} of {replicates} replicates failed")]
    StudyFailed { failed: usize, replicates: usize },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonConvergence { .. }
            | Error::Singular(_)
            | Error::NegativeStatistic { .. }
            | Error::DegenerateData(_)
            | Error::StudyFailed { .. } => true,
            Error::Subtree { source, .. } | Error::Row { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn in_subtree(self, node: impl Into<String>) -> Error {
        Error::Subtree {
            node: node.into(),
            source: Box::new(self),
        }
    }
}
