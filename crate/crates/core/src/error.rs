use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown {category} component `{name}`")]
    UnknownComponent {
        category: String,
        name: String,
        line: usize,
    },

    #[error("line {line}: unsupported version {version} for `{component}`")]
    UnsupportedVersion {
        component: String,
        version: i64,
        line: usize,
    },

    #[error("invalid state: {0}")]
    State(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Failure inside one stage of the transmit/receive chain.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("system digest mismatch: state file has {stored}, current system is {current}")]
    DigestMismatch { stored: String, current: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("network error: {0}")]
    Network(#[source] io::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }
}
