use thiserror::Error;

/// Errors raised by the vision pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("corrupt image: {0}")]
    CorruptImage(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("crop target {target_w}x{target_h} exceeds image {width}x{height}")]
    TargetTooLarge {
        width: u32,
        height: u32,
        target_w: u32,
        target_h: u32,
    },
    #[error("image {width}x{height} is not divisible by factor {factor}")]
    NotDivisible { width: u32, height: u32, factor: u32 },
    #[error("image {width}x{height} is smaller than the {min_w}x{min_h} analysis size")]
    ImageTooSmall {
        width: u32,
        height: u32,
        min_w: u32,
        min_h: u32,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("analysis took {elapsed_s:.3} s, budget is {budget_s:.0} s")]
    BudgetExceeded { elapsed_s: f64, budget_s: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("png encoding failed: {0}")]
    Encode(String),
}

pub type Result<T> = std::result::Result<T, Error>;
