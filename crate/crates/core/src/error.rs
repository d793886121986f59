use thiserror::Error;

pub type Result<T, E = AtdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AtdError {
    #[error("{dim} index {index} out of range (size {len})")]
    IndexOutOfRange {
        dim: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid tensor shape: {0}")]
    Shape(String),

    #[error(
        "all-zero attention marginal for sentence {sentence_id}, language {language}, layer {layer}, head {head}"
    )]
    DegenerateAttention {
        sentence_id: u32,
        language: String,
        layer: u32,
        head: u32,
    },

    #[error("distribution length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("distribution is empty")]
    EmptyDistribution,

    #[error("distribution is not normalized (sum {sum}) or has negative/non-finite entries")]
    NotNormalized { sum: f64 },

    #[error("LP oracle refuses support size {n} (max {max})")]
    OracleTooLarge { n: usize, max: usize },

    #[error("invalid Sinkhorn configuration: {0}")]
    SinkhornConfig(String),

    #[error("parse error at line {line} (byte offset {offset}): {message}")]
    Parse {
        line: usize,
        offset: usize,
        message: String,
    },

    #[error("Newick parse error at position {pos}: {message}")]
    Newick { pos: usize, message: String },

    #[error("distribution key sets differ; missing: {}", .missing.join(", "))]
    KeyMismatch { missing: Vec<String> },

    #[error("language {language} is missing {count} record(s)")]
    MissingRecords { language: String, count: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("Neighbor-Joining needs at least 3 taxa, got {0}")]
    TooFewTaxa(usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("unknown label: {0}")]
    UnknownLabel(String),

    #[error("label sets do not match: {0}")]
    LabelMismatch(String),

    #[error("sample is too small ({len}, need at least {min})")]
    SampleTooSmall { len: usize, min: usize },

    #[error("no word order known for language {0}")]
    UnknownWordOrder(String),

    #[error("missing coordinates for: {}", .0.join(", "))]
    MissingCoordinates(Vec<String>),

    #[error("invalid registry: {0}")]
    Registry(String),

    #[error("invalid quality table: {0}")]
    Quality(String),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
