use thiserror::Error;

use crate::lrfs::Label;

/// Errors raised by density construction, the filter recursions and the oracle.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate label {0} in labeled finite set")]
    DuplicateLabel(Label),

    #[error("label {0} is neither a persisting nor a birth label")]
    UnknownLabel(Label),

    #[error("birth label {0} already present in the prior label universe")]
    LabelCollision(Label),

    #[error("normalizer below floor while computing {0}")]
    DegenerateNormalizer(&'static str),

    #[error("clutter intensity is zero at an assigned measurement")]
    ZeroClutterDensity,

    #[error("association count {count} exceeds cap {cap}; use ranked truncation")]
    CombinatorialCap { count: u128, cap: usize },

    #[error("every hypothesis was pruned")]
    EmptyDensity,

    #[error("unsupported density: {0}")]
    UnsupportedDensity(String),

    #[error("oracle enumeration of {size} entries exceeds cap {cap}")]
    CardinalityOverflow { size: u128, cap: u128 },

    #[error("finite-difference step {0} is below numerical resolution")]
    StepUnderflow(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("step {step}: {source}")]
    AtStep {
        step: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn at_step(self, step: u32) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self.root(), Error::Config { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
