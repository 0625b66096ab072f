use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid [{k}]^{n} needs ~{required} bytes, above the cap of {cap} bytes")]
    ShapeTooLarge { n: u32, k: u32, required: u128, cap: u64 },

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("enumeration would yield {needed} tables, above the cap of {cap}")]
    EnumerationCap { needed: u128, cap: u64 },

    #[error("vertex {0} is not a sink")]
    NotASink(usize),

    #[error("empty histogram: total variation is undefined")]
    EmptyHistogram,

    #[error("iteration did not converge within {iterations} steps")]
    NoConvergence { iterations: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
