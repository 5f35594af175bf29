use std::io;

use thiserror::Error;

/// Errors produced anywhere in the enhancement library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// The bytes were readable but are not a supported image encoding.
    #[error("unsupported or malformed image: {0}")]
    Format(String),

    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The input is valid but numerically degenerate for the requested operation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Malformed configuration text.
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    /// An error raised inside a named pipeline stage.
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage attribution stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
