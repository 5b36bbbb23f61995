use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by all solver components.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("ill-posed branch: {0}")]
    IllPosedBranch(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("accuracy target not met: {0}")]
    Accuracy(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("outside supported domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag for each variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidOrder(_) => "invalid-order",
            Error::IllPosedBranch(_) => "ill-posed-branch",
            Error::InvalidWeight(_) => "invalid-weight",
            Error::InvalidResolution(_) => "invalid-resolution",
            Error::Accuracy(_) => "accuracy",
            Error::Shape { .. } => "shape",
            Error::LinearSolver(_) => "linear-solver",
            Error::Domain(_) => "domain",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
