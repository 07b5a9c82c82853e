use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),

    #[error("IOPP required: {0}")]
    IoppRequired(String),

    #[error("formula uses X, which the accelerated semantics does not support")]
    NextOperator,

    /// Explicit resource exhaustion; nothing is ever silently truncated.
    #[error("resource cap exceeded: {what} (limit {limit})")]
    ResourceCap { what: &'static str, limit: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, Error::ResourceCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
