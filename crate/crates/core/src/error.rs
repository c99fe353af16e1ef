use thiserror::Error;

/// Errors produced by graph construction, spectral estimation, the transform
/// and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("graph is disconnected ({components} components); increase the neighbor count")]
    DisconnectedGraph { components: usize },

    #[error("vertex {vertex} has zero degree")]
    ZeroDegree { vertex: usize },

    #[error("operator is not symmetric")]
    NotSymmetric,

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("second and third eigenvalues are nearly equal ({lambda_1} vs {lambda_2})")]
    NearDegenerate { lambda_1: f64, lambda_2: f64 },

    #[error("dense eigendecomposition of size {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("unknown mask family `{0}`")]
    UnknownFamily(String),

    #[error("argument {0} lies outside the mask domain [0, pi]")]
    DomainViolation(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coefficient metadata does not match the plan: {0}")]
    MetaMismatch(String),

    #[error("level {levels} scaled spectrum {scaled} exceeds pi")]
    ScaleOverflow { levels: usize, scaled: f64 },

    #[error("non-finite value in solver state at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("label set must contain both classes")]
    SingleClassLabels,

    #[error("reference vector has zero norm")]
    ZeroReference,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
