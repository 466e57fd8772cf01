use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("box radius must be at least 1")]
    ZeroRadius,
    #[error("box of dimension {dim} and radius {radius} has too many sites")]
    TooLarge { dim: usize, radius: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("start point {0} lies outside the box")]
    StartOutsideBox(String),
    #[error("box radius {radius} is too small for the kernel (need at least {required})")]
    BoxTooSmall { radius: usize, required: usize },
    #[error("escaped mass {escaped:e} exceeds the tolerance {tolerance:e}")]
    TruncationExceeded { escaped: f64, tolerance: f64 },
    #[error("sequence has {available} terms but the Poisson tail needs {required}")]
    SequenceTooShort { available: usize, required: usize },
    #[error("kernel row at {site} sums to {sum}, not 1")]
    RowSum { site: String, sum: String },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("kernel dimension {kernel} does not match box dimension {lattice}")]
    DimensionMismatch { kernel: usize, lattice: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("division by a series with zero constant term")]
    NonInvertible,
    #[error("coefficient {index} is beyond the truncation order {order}")]
    BeyondOrder { index: usize, order: usize },
    #[error("sums of p_n diverge for d = {0} (recurrent walk)")]
    Divergent(usize),
    #[error("need at least {required} terms, got {available}")]
    TooFewTerms { available: usize, required: usize },
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("sites {0} and {1} are not adjacent on the torus")]
    NotAdjacent(String, String),
    #[error("initial condition is invalid: {0}")]
    BadInitial(String),
    #[error("need at least {required} trials, got {got}")]
    TooFewTrials { required: usize, got: usize },
    #[error("unknown test function `{0}`")]
    UnknownFunction(String),
}
