//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the mining toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty token for `{field}` in event")]
    EmptyEventField { field: &'static str },

    #[error("marking references unknown place `{place}` in flow `{flow}`")]
    UnknownPlace { flow: String, place: String },

    #[error("transition `{transition}` is not enabled in flow `{flow}`")]
    NotEnabled { flow: String, transition: String },

    #[error("unknown transition `{transition}` in flow `{flow}`")]
    UnknownTransition { flow: String, transition: String },

    #[error("flow `{flow}` fails validation: {summary}")]
    InvalidFlow { flow: String, summary: String },

    #[error("possibly unbounded flow `{flow}`: a firing path exceeded {max_steps} steps")]
    PossiblyUnbounded { flow: String, max_steps: usize },

    #[error("flow instance stuck in `{flow}` at marking {marking:?}: no causal continuation")]
    InstanceStuck { flow: String, marking: Vec<String> },

    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error("unknown slicing method `{0}`")]
    UnknownSliceMethod(String),

    #[error("training windows are empty")]
    EmptyWindows,

    #[error("inconsistent window length: expected prefix of {expected}, found {found}")]
    InconsistentWindow { expected: usize, found: usize },

    #[error("prefix has length {found}, model for pattern length {w} expects {expected}")]
    WrongPrefixLength { w: usize, expected: usize, found: usize },

    #[error("vocabulary index {index} out of range (size {size})")]
    OutOfVocabulary { index: usize, size: usize },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    #[error("no model available for pattern length {length}")]
    MissingModel { length: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("empty flow set")]
    EmptyFlowSet,

    #[error("unknown flow name `{0}`")]
    UnknownFlow(String),

    #[error(
        "ground-truth universe too large: execution of length {len} exceeds the cap of {cap}"
    )]
    UniverseTooLarge { len: usize, cap: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error{}: {source}", path.as_ref().map(|p| format!(" on {p}")).unwrap_or_default())]
    Io {
        path: Option<String>,
        #[source]
        source: std::io::Error,
    },

    #[error("json error{}: {source}", path.as_ref().map(|p| format!(" on {p}")).unwrap_or_default())]
    Json {
        path: Option<String>,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: Some(path.into()), source }
    }

    pub(crate) fn json(path: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json { path: Some(path.into()), source }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }
}

impl From<serde_json::Error> for Error {
    fn from(source: serde_json::Error) -> Self {
        Error::Json { path: None, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
