use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    /// A record violates a corpus invariant (offset mismatch, dangling reference, ...).
    #[error("integrity error in record `{record}`: {reason}")]
    Integrity { record: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("template `{template_id}` expects placeholder type `{expected}` but annotation has type `{actual}`")]
    TypeMismatch {
        template_id: String,
        expected: String,
        actual: String,
    },

    #[error("malformed annotation in note `{note_id}` at {start}..{end}: {reason}")]
    MalformedAnnotation {
        note_id: String,
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("unknown {kind} `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss { epoch: usize, batch: usize, detail: String },

    #[error("no answer of `{question_id}` lies wholly inside one section")]
    CrossesSection { question_id: String },

    #[error("missing prediction for question `{0}`")]
    MissingPrediction(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn integrity(record: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Integrity {
            record: record.into(),
            reason: reason.into(),
        }
    }
}
