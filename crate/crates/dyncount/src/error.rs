use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector length {got} does not match the declared horizon {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("entry {value} at index {index} is outside {{-1, 0, 1}}")]
    EntryOutOfRange { index: usize, value: i64 },

    #[error("vector is not a member of the requested set: {0}")]
    NotAMember(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("work budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),

    #[error("monotonicity check failed: {0}")]
    NotMonotone(String),

    #[error("missing sensitivity: {0}")]
    MissingSensitivity(String),

    #[error("self-loop update on node {0}")]
    SelfLoop(usize),

    #[error("node index {0} out of range for a graph on {1} nodes")]
    UnknownNode(usize, usize),

    #[error("degree bound violated: node {node} reached degree {degree} > {bound}")]
    DegreeBoundViolated { node: usize, degree: usize, bound: u64 },

    #[error("truncation is undefined for triangle contribution")]
    TruncationUndefined,
}

pub type Result<T> = std::result::Result<T, Error>;
