use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("duplicate node in edge {edge}")]
    DuplicateNode { edge: usize },

    #[error("node index {node} out of range in edge {edge} (n = {n})")]
    NodeOutOfRange { edge: usize, node: usize, n: usize },

    #[error("edge {edge} has size {size}, need at least 2")]
    EdgeTooSmall { edge: usize, size: usize },

    #[error("isolated node {node}: every node must lie in at least one hyperedge")]
    IsolatedNode { node: usize },

    #[error("hypergraph has no hyperedges")]
    EmptyHypergraph,

    #[error("edge count mismatch: header says m = {header}, found {found} edges")]
    EdgeCountMismatch { header: usize, found: usize },

    #[error("zero feature row at node {node} cannot be normalized")]
    ZeroRow { node: usize },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("weight {value} on edge {edge} must be positive and finite")]
    NonpositiveWeight { edge: usize, value: f64 },

    #[error(
        "flow step of dt = {dt} would drive edge {edge} nonpositive; max admissible dt = {max_dt}"
    )]
    FlowStepTooLarge { edge: usize, dt: f64, max_dt: f64 },

    #[error("nodes {a} and {b} are not connected; no finite transport distance")]
    UnreachablePair { a: usize, b: usize },

    #[error("step size tau = {tau} exceeds the stability bound {bound}; pass force to override")]
    UnstableTau { tau: f64, bound: f64 },

    #[error("diffusion diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("training aborted: non-finite loss at epoch {epoch}")]
    NanLoss { epoch: usize },

    #[error("degenerate split: {message}")]
    DegenerateSplit { message: String },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },

    #[error("structure noise could not avoid isolating a node within {tries} tries")]
    NoiseBudgetExhausted { tries: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}
