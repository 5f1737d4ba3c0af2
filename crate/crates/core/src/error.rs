use thiserror::Error;

/// Errors raised by the grid, sorting, combinatorics and query layers.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum GridError {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("axis {axis} out of range 1..={d}")]
    AxisOutOfRange { axis: usize, d: usize },
    #[error("coordinate {value} of point {id} is not finite")]
    NonFiniteCoordinate { id: usize, value: f64 },
    #[error("point ids must be exactly 1..={expected_max}; offending id {id}")]
    InvalidIds { id: usize, expected_max: usize },
    #[error("{cells} cells cannot hold {points} points")]
    CapacityTooSmall { cells: usize, points: usize },
    #[error("grid side length must be at least 1")]
    ZeroSide,
    #[error("unknown point id {0}")]
    UnknownId(usize),
    #[error("cell {0:?} is outside the grid")]
    CellOutOfRange(Vec<usize>),
    #[error("placement is not a bijection: {0}")]
    NotBijective(String),
    #[error("operation requires a {expected}-dimensional grid, got d = {found}")]
    UnsupportedDimension { expected: usize, found: usize },
    #[error("grid is not in a stable state")]
    NotStable,
    #[error("grid points do not match the rank configuration")]
    ConfigMismatch,
    #[error("not a permutation of 1..={0}")]
    InvalidPermutation(usize),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("size guard exceeded: {what} = {size} > {limit}")]
    GuardExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("no stable state reached within {steps} phases")]
    NotConverged { steps: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("at least two genuine points are required")]
    TooFewPoints,
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = GridError> = std::result::Result<T, E>;
