use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("atom {0} is unassigned")]
    UnassignedAtom(u32),
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("not a permutation of the elements: {0}")]
    PermutationMismatch(String),
    #[error("malformed matching: {0}")]
    MalformedMatching(String),
    #[error("instance too large: {0}")]
    SizeBound(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
