use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel exceeds patch")]
    KernelExceedsPatch,
    #[error("kernel dimensions must be odd, got {0}x{1}")]
    EvenKernel(usize, usize),
    #[error("insufficient resolution for level {level}: patch is {width}x{height}")]
    InsufficientResolution { level: usize, width: usize, height: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("focus distance inside focal length")]
    FocusInsideFocalLength,
    #[error("empty stack")]
    EmptyStack,
    #[error("stack has no dual-pixel data")]
    NoDualPixel,
    #[error("textureless patch")]
    Textureless,
    #[error("coordinates ({0}, {1}) outside the calibration table")]
    OutOfRange(f64, f64),
    #[error("inconsistent stack length: expected {expected}, found {found}")]
    InconsistentStackLength { expected: usize, found: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
