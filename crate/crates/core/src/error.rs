use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("weight exponent must be finite and positive, got {0}")]
    InvalidExponent(f64),

    #[error("configuration must not be empty")]
    EmptyConfiguration,

    #[error("configuration has all amplitudes equal to zero")]
    ZeroConfiguration,

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not unitary: max |U^H U - I| = {deviation:e} exceeds {tolerance:e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rejection sampling produced {produced} of {requested} vectors in {attempts} attempts (sample floor {floor:e} too high)")]
    SamplingExhausted {
        produced: usize,
        requested: usize,
        attempts: usize,
        floor: f64,
    },

    #[error("ambiguous numerical rank: gap ratio {gap:.3} around threshold is below {required}")]
    AmbiguousRank { gap: f64, required: f64 },

    #[error("exponential argument too large: ||tA|| = {0:.3} exceeds 50")]
    ExponentialOverflow(f64),

    #[error("schedule: {0}")]
    InvalidSchedule(String),

    #[error("total weight is zero")]
    ZeroWeight,

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
