use std::path::PathBuf;

use csb_core::CsbError;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Model(#[from] CsbError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("key `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("unknown preset `{0}` (expected I, II, III or IV)")]
    UnknownPreset(String),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("confidence interval needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

impl LabError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::InvalidValue {
            key: key.to_owned(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
