//! Crate-wide error type.

use thiserror::Error;

use crate::prompt::SoftPrompt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding has zero norm; cosine similarity is undefined")]
    DegenerateEmbedding,

    #[error("invalid neighborhood size {k} for vocabulary of {vocab_size} tokens")]
    InvalidNeighborhood { k: usize, vocab_size: usize },

    #[error("surface {surface:?} maps to no known vocabulary token")]
    UnknownSurface { surface: String },

    #[error("label {word:?} for class {class:?} does not map to a single vocabulary token ({reason})")]
    InvalidLabelToken {
        class: String,
        word: String,
        reason: String,
    },

    #[error("token {surface:?} is assigned to both class {first:?} and class {second:?}")]
    AmbiguousVerbalizer {
        surface: String,
        first: String,
        second: String,
    },

    #[error("class {class:?} has an empty verbalizer token set")]
    EmptyVerbalizer { class: String },

    #[error("class {class:?} has no label for language {language:?}")]
    MissingLabel { class: String, language: String },

    #[error("vocabulary of {vocab_size} tokens leaves no smoothing mass ({label_tokens} label tokens)")]
    DegenerateSmoothing {
        vocab_size: usize,
        label_tokens: usize,
    },

    #[error("unknown class {class:?}")]
    UnknownClass { class: String },

    #[error("penalty is undefined for fewer than two classes")]
    PenaltyUndefined,

    #[error("input of {got} tokens exceeds backend limit of {limit} (prompt length {prompt_len})")]
    InputTooLong {
        got: usize,
        limit: usize,
        prompt_len: usize,
    },

    #[error("class {class:?} has {available} examples, need {requested} shots")]
    NotEnoughShots {
        class: String,
        available: usize,
        requested: usize,
    },

    #[error("non-finite loss at step {step}; last good prompt attached")]
    DivergenceDetected {
        step: u64,
        last_good: Box<SoftPrompt>,
    },

    #[error("invalid prompt checkpoint: {reason}")]
    InvalidCheckpoint { reason: String },

    #[error("prompt dimension {prompt_dim} does not match backend dimension {backend_dim}")]
    IncompatiblePrompt {
        prompt_dim: usize,
        backend_dim: usize,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },

    #[error("duplicate example id {id:?}")]
    DuplicateId { id: String },

    #[error("no backend registered under name {name:?}")]
    UnknownBackend { name: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code for this error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateEmbedding => "DEGENERATE_EMBEDDING",
            Error::InvalidNeighborhood { .. } => "INVALID_NEIGHBORHOOD",
            Error::UnknownSurface { .. } => "UNKNOWN_SURFACE",
            Error::InvalidLabelToken { .. } => "INVALID_LABEL_TOKEN",
            Error::AmbiguousVerbalizer { .. } => "AMBIGUOUS_VERBALIZER",
            Error::EmptyVerbalizer { .. } => "EMPTY_VERBALIZER",
            Error::MissingLabel { .. } => "MISSING_LABEL",
            Error::DegenerateSmoothing { .. } => "DEGENERATE_SMOOTHING",
            Error::UnknownClass { .. } => "UNKNOWN_CLASS",
            Error::PenaltyUndefined => "PENALTY_UNDEFINED",
            Error::InputTooLong { .. } => "INPUT_TOO_LONG",
            Error::NotEnoughShots { .. } => "NOT_ENOUGH_SHOTS",
            Error::DivergenceDetected { .. } => "DIVERGENCE_DETECTED",
            Error::InvalidCheckpoint { .. } => "INVALID_CHECKPOINT",
            Error::IncompatiblePrompt { .. } => "INCOMPATIBLE_PROMPT",
            Error::MalformedRecord { .. } => "MALFORMED_RECORD",
            Error::DuplicateId { .. } => "DUPLICATE_ID",
            Error::UnknownBackend { .. } => "UNKNOWN_BACKEND",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::InvalidConfig(_) => "INVALID_CONFIG",
            Error::InvalidDocument(_) => "INVALID_DOCUMENT",
            Error::Io(_) => "IO_ERROR",
            Error::Json(_) => "JSON_ERROR",
            Error::Csv(_) => "CSV_ERROR",
        }
    }

    /// Whether the error indicates bad inputs rather than a runtime failure.
    ///
    /// CLI exit codes key off this: validation errors exit 1, runtime
    /// failures exit 2.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::DivergenceDetected { .. } | Error::Io(_)
        )
    }
}
