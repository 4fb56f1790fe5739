use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::edits::EditTask;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed audio: {0}")]
    Format(String),
    #[error("unsupported audio encoding: {0}")]
    Unsupported(String),
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("undefined input: {0}")]
    UndefinedInput(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("client error: {0}")]
    Client(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("sampler error: {0}")]
    Sampler(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("study failed: all {} trials failed ({})", .0.len(), .0.join("; "))]
    StudyFailed(Vec<String>),
    #[error("candidate search exhausted: no candidate passed the judge threshold")]
    Exhausted,
    #[error("study complete: no unserved comparisons remain")]
    StudyComplete,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by an external model or service.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::Backend(_) | Error::Client(_))
    }
}

/// One violated constraint of a manual edit request.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConstraintViolation {
    pub constraint: String,
    pub value: String,
}

impl ConstraintViolation {
    pub fn new(constraint: impl Into<String>, value: impl fmt::Display) -> Self {
        Self {
            constraint: constraint.into(),
            value: value.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConstraintError {
    pub task: Option<EditTask>,
    pub violations: Vec<ConstraintViolation>,
}

impl ConstraintError {
    pub fn single(task: Option<EditTask>, constraint: impl Into<String>, value: impl fmt::Display) -> Self {
        Self {
            task,
            violations: vec![ConstraintViolation::new(constraint, value)],
        }
    }

    pub fn violates(&self, constraint: &str) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}

impl fmt::Display for ConstraintError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.task {
            Some(task) => write!(f, "{task} constraint violated:")?,
            None => write!(f, "constraint violated:")?,
        }
        for (i, v) in self.violations.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}\"{}\" (got {})", v.constraint, v.value)?;
        }
        Ok(())
    }
}
