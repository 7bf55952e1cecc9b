use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its constraints (e.g. non-positive
    /// temperature, zero batch size, infeasible graph density).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An input matrix contains NaN or infinite entries.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// An operation that requires an acyclic graph received a cyclic one.
    /// Carries the set of nodes left after peeling all sources.
    #[error("graph contains a directed cycle through nodes {0:?}")]
    CyclicGraph(Vec<usize>),

    /// The ROC curve is undefined: the ground truth has no positive or no
    /// negative ordered pairs.
    #[error("AUC undefined: truth has {positives} positive and {negatives} negative pairs")]
    DegenerateTruth { positives: usize, negatives: usize },

    /// Training produced a non-finite loss.
    #[error(
        "non-finite loss at epoch {epoch} (t = {temperature}): grad norms {grad_norms:?}"
    )]
    NonFiniteLoss {
        epoch: usize,
        temperature: f64,
        grad_norms: Vec<f64>,
    },

    /// Dataset or result file I/O failed.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A dataset or report file does not parse.
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
