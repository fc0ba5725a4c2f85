use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid side {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("size mismatch: expected side {expected}, got {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid scale range: {0}")]
    InvalidScales(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("singular moment-correction system at scale {j}, orientation {k}")]
    SingularCorrection { j: i32, k: usize },

    #[error("energy is not differentiable with epsilon = 0 in scattering mode")]
    NonSmooth,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
