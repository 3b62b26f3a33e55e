use thiserror::Error;

/// Errors raised by space construction, operator algebra and state evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("space must contain at least one point")]
    EmptySpace,

    #[error("distance matrix is not square: {rows} rows, row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("distance matrix is asymmetric at ({x}, {y}): {dxy} != {dyx}")]
    Asymmetric { x: usize, y: usize, dxy: f64, dyx: f64 },

    #[error("distance between distinct points {x} and {y} is {d}, must be positive")]
    ZeroDistance { x: usize, y: usize, d: f64 },

    #[error("invalid distance {d} at ({x}, {y})")]
    InvalidDistance { x: usize, y: usize, d: f64 },

    #[error("triangle inequality fails for ({x}, {z}, {y}): d(x,z) = {dxz} > d(x,y) + d(y,z) = {via}")]
    Triangle { x: usize, z: usize, y: usize, dxz: f64, via: f64 },

    #[error("operands live on different spaces")]
    SpaceMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("point id {id} out of range for space of {size} points")]
    PointOutOfRange { id: usize, size: usize },

    #[error("map is not injective: {x} and {y} both map to {image}")]
    NotInjective { x: usize, y: usize, image: usize },

    #[error("map is not a bijection of the space")]
    NotBijective,

    #[error("numeric overflow: exponent {exponent} exceeds {limit} ({context})")]
    Overflow { exponent: f64, limit: f64, context: String },

    #[error("normalizer vanishes: {0}")]
    ZeroNormalizer(String),

    #[error("state weights are invalid: {0}")]
    InvalidState(String),

    #[error("negative weight {weight} at point {id} (beta = {beta} < log n = {log_n})")]
    NegativeWeight { id: usize, weight: f64, beta: f64, log_n: f64 },

    #[error("weights do not stabilize at point {id}: {detail}")]
    Divergence { id: usize, detail: String },

    #[error("prefix lengths differ: {0} vs {1}")]
    PrefixMismatch(usize, usize),

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn is_overflow(&self) -> bool {
        matches!(self, Error::Overflow { .. })
    }
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
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
