use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("batch size must be at least 1")]
    EmptyBatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("problem `{0}` has no exact evaluators")]
    MissingExactEvaluator(String),

    #[error("instance generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("group `{group}` lacks {missing} labels")]
    DegenerateGroup { group: &'static str, missing: &'static str },

    #[error("mixed outer-function tagging: index {index} is not {expected}")]
    MixedOuterTagging { index: usize, expected: &'static str },

    #[error("outer function {index} declared monotone but has negative subgradient {slope} at u = {at}")]
    MonotonicityViolated { index: usize, slope: f64, at: f64 },

    #[error("tracked index {index} out of range for {len} tracked values")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("batch provenance mismatch at tracked index {index}: values were not drawn from the same stream")]
    BatchProvenance { index: usize },

    #[error("block size {block} exceeds population {total}")]
    BlockTooLarge { block: usize, total: usize },

    #[error("θ = {theta} must be below 1/C = {limit}")]
    ThetaTooLarge { theta: f64, limit: f64 },

    #[error("instance document mismatch: {0}")]
    InstanceMismatch(String),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
