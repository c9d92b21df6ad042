//! Error type shared across the crate.

/// Unified error type for all modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain too large: {0}")]
    DomainTooLarge(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("conflicting labels for point {0} in sample")]
    ConflictingSample(usize),
    #[error("empty sample")]
    EmptySample,
    #[error("empty batch")]
    EmptyBatch,
    #[error("illegal query: {0}")]
    IllegalQuery(String),
    #[error("query budget exceeded for {kind} (limit {limit})")]
    QueryBudgetExceeded { kind: &'static str, limit: u64 },
    #[error("label stream is not realizable by the class")]
    NotRealizableStream,
    #[error("inconsistent oracle answers: {0}")]
    InconsistentOracle(String),
    #[error("no unrealizable labeling among the {0} tested")]
    NoUnrealizableLabeling(usize),
    #[error("ambiguous center: found {0} unrealizable labelings, expected exactly 1")]
    AmbiguousCenter(usize),
    #[error("learner contract violation: {0}")]
    ContractViolation(String),
    #[error("no tree of depth <= {depth_cap} exists for root value {n}")]
    Infeasible { n: u64, depth_cap: u32 },
    #[error("argument {0} outside the valid range")]
    OutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
