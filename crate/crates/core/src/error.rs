use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path} is not valid UTF-8")]
    NotUtf8 { path: PathBuf },

    #[error("duplicate article id {0:?}")]
    DuplicateArticle(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("unknown technique {name:?}; valid labels are: {valid}")]
    UnknownTechnique { name: String, valid: String },

    #[error("invalid span ({start}, {end}) in article {article_id}: {reason}")]
    InvalidSpan {
        article_id: String,
        start: usize,
        end: usize,
        reason: String,
    },

    #[error("unknown article id {0:?}")]
    UnknownArticle(String),

    #[error("spans from different articles: {0:?} and {1:?}")]
    MixedArticles(String, String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("zero count for class {0}")]
    ZeroClassCount(String),

    #[error("training diverged at iteration {iteration}: loss is {loss}")]
    Diverged { iteration: usize, loss: f64 },

    #[error("gradient check failed: relative error {rel_error:e} exceeds {tolerance:e}")]
    GradientCheck { rel_error: f64, tolerance: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl std::fmt::Display, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
