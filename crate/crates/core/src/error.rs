use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cell index {value} out of range 1..={cells} at {field}")]
    CellIndexOutOfRange {
        field: String,
        value: i64,
        cells: usize,
    },
    #[error("network has no input types")]
    EmptyInputList,
    #[error("cell count must be positive, got {0}")]
    NonPositiveCellCount(i64),
    #[error("input map {field} has {found} entries, expected {expected}")]
    InputLengthMismatch {
        field: String,
        found: usize,
        expected: usize,
    },
    #[error("cell counts differ: {0} vs {1}")]
    CellCountMismatch(usize, usize),
    #[error("partition covers {found} cells, network has {expected}")]
    PartitionSizeMismatch { found: usize, expected: usize },
    #[error("partition is not balanced for this network")]
    UnbalancedPartition,
    #[error("{cells} cells exceeds the enumeration cap of {cap}")]
    TooManyCells { cells: usize, cap: usize },
    #[error("operation needs a {expected}-cell network, got {found}")]
    WrongCellCount { expected: usize, found: usize },
    #[error("network is disconnected")]
    Disconnected,
    #[error("lattice does not match any three-cell structure: {0}")]
    UnclassifiableLattice(String),
    #[error("eigenfunction is not real at the given first derivatives")]
    NotRealAtThisPoint,
    #[error("eigenfunction is never real, no real bifurcation condition exists")]
    NotRealizableReal,
    #[error("numeric kernel has dimension {found}, eigenfunction claims {expected}")]
    KernelDimensionMismatch { expected: usize, found: usize },
    #[error("Jacobian restricted to its range is singular")]
    SingularRangeRestriction,
    #[error("quadratic part of the reduced system vanishes")]
    DegenerateQuadratic,
    #[error("eigenfunction is not defective (1,2) at this profile")]
    NotDefectiveHere,
    #[error("unhandled configuration: {0}")]
    UnhandledConfiguration(String),
    #[error("corrupt fixture {id}: {reason}")]
    CorruptFixture { id: String, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
