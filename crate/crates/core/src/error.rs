use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration key failed validation. The key is kept separately so
    /// callers can report it verbatim.
    #[error("invalid value for `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config { .. } | Error::UnknownKey(_) => 1,
            Error::Runtime(_) | Error::Io(_) => 2,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
