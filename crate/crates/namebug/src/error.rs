use std::fmt;
use std::path::Path;

use namebug_core::detector::DetectorError;
use namebug_core::embeddings::EmbeddingError;
use namebug_core::naming::VocabError;
use namebug_core::neuralnet::NetError;
use namebug_core::synthcorpus::SpecError;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad command line or configuration syntax.
    Usage,
    /// Inputs that violate a stage's contract: missing or mismatched files,
    /// malformed data.
    Input,
    /// An internal invariant broke (e.g. training diverged).
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Input => 2,
            ErrorKind::Internal => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Error {
    pub kind: ErrorKind,
    pub message: String,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn usage(message: impl Into<String>) -> Self {
        Error { kind: ErrorKind::Usage, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Error { kind: ErrorKind::Input, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Error { kind: ErrorKind::Internal, message: message.into() }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Error::input(format!("{}: {err}", path.display()))
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Error {}

impl From<VocabError> for Error {
    fn from(e: VocabError) -> Self {
        Error::input(e.to_string())
    }
}

impl From<EmbeddingError> for Error {
    fn from(e: EmbeddingError) -> Self {
        Error::input(e.to_string())
    }
}

impl From<SpecError> for Error {
    fn from(e: SpecError) -> Self {
        Error::input(e.to_string())
    }
}

impl From<NetError> for Error {
    fn from(e: NetError) -> Self {
        match e {
            NetError::NonFiniteLoss { .. } | NetError::InvalidParameters(_) => Error::internal(e.to_string()),
            _ => Error::input(e.to_string()),
        }
    }
}

impl From<DetectorError> for Error {
    fn from(e: DetectorError) -> Self {
        match e {
            DetectorError::Net(n) => n.into(),
            other => Error::input(other.to_string()),
        }
    }
}
