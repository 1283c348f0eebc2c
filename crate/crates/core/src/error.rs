use thiserror::Error;

/// Errors raised by the library. Verification failures are not errors: the
/// `verify_*` operations return reports that carry their counterexamples.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point index {index} out of range for a sample of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distance matrix: {0}")]
    InvalidMetric(String),

    #[error("hausdorff distance undefined for empty subspace")]
    EmptySubspace,

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("cover condition violated: point {0} lies in no cover set")]
    CoverConditionViolated(usize),

    #[error("invalid cover: {0}")]
    InvalidCover(String),

    #[error("simplex {0:?} is missing from a truncated nerve")]
    NerveTooSmall(Vec<usize>),

    #[error("unknown poset element {0}")]
    UnknownElement(String),

    #[error("invalid partial order: {0}")]
    InvalidOrder(String),

    #[error("subset is not open (not up-closed): element {0} has a successor outside it")]
    NotOpen(usize),

    #[error("map is not monotone: {0}")]
    NotMonotone(String),

    #[error("diagram is not functorial: {0}")]
    NotFunctorial(String),

    #[error("refinement is not strict: point {point} between levels {fine} and {coarse}")]
    NotStrict {
        point: usize,
        fine: usize,
        coarse: usize,
    },

    #[error("invalid refinement: {0}")]
    InvalidRefinement(String),

    #[error("index poset of the tower is not a finite chain")]
    NotAChain,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
