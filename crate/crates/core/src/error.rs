use thiserror::Error;

/// Everything that can go wrong in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interaction set: {0}")]
    InvalidInteractionSet(String),

    #[error("region is not contained in the spin window: {0}")]
    RegionOutsideWindow(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("enumeration refused: {free} free sites exceeds the limit of {limit}")]
    SizeLimit { free: usize, limit: usize },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("a rational direction is required: {0}")]
    RationalDirectionRequired(String),

    #[error("undefined count: {0}")]
    UndefinedCount(String),

    #[error("no admissible period up to {t_max}")]
    PeriodSearchExhausted { t_max: u64 },

    #[error("basis construction failed for {0}")]
    BasisConstruction(String),

    #[error("capacity accounting violated: {0}")]
    CapacityAccounting(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("infeasible cell target: {0}")]
    InfeasibleTarget(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
