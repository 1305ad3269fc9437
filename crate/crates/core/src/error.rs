use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential specification: {0}")]
    InvalidSpec(String),

    #[error("matrix size N = {0} is degenerate: corner and off-diagonal entries coincide for N < 3")]
    DegenerateSize(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in transfer product after {step} steps")]
    NonFinite { step: usize },

    #[error("eigenvalue iteration did not converge at index {index} (potential seed {seed}, stream {stream})")]
    NoConvergence { index: usize, seed: u64, stream: u64 },

    #[error("band structure: detected {found} bands, expected {expected}")]
    BandCount { found: usize, expected: usize },

    #[error("ambiguous conjugate pairing for eigenvalue {re} + {im}i ({candidates} candidates)")]
    AmbiguousPairing { re: f64, im: f64, candidates: usize },

    #[error("flow step underflow at g = {g}: labels {a} and {b} cannot be separated")]
    StepUnderflow { g: f64, a: usize, b: usize },

    #[error("sample too small: {got} values, need at least {need}")]
    SampleTooSmall { got: usize, need: usize },

    #[error("no eigenvalues in window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("non-finite coordinate in plot layer `{0}`")]
    NonFiniteCoordinate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
