use thiserror::Error;

/// Errors surfaced by the workflow engine.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition or domain invariant was violated by the caller.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A provider backend could not be reached; the call may be retried.
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),

    /// A provider replied, but the reply could not be interpreted.
    #[error("malformed response: {0}")]
    MalformedResponse(String),

    /// A referenced task id does not exist in the knowledge graph.
    #[error("unknown node: {0}")]
    UnknownNode(String),

    /// A file did not conform to its expected format.
    #[error("parse error: {context}: {message}")]
    ParseError { context: String, message: String },

    /// The modality is not supported by this version.
    #[error("unsupported modality: {0}")]
    UnsupportedModality(String),

    /// Steiner extraction was asked to span terminals that live in
    /// different weakly-connected components of the knowledge graph.
    #[error("terminals span disconnected components: {0:?}")]
    DisconnectedTerminals(Vec<String>),

    /// Connectivity enhancement exhausted its similarity budget while the
    /// workflow graph still had more than one component.
    #[error("cannot connect workflow graph; components: {0:?}")]
    CannotConnect(Vec<Vec<String>>),

    /// A pluggable dependency analyzer emitted a cyclic or unreachable order.
    #[error("invalid analyzer output: {0}")]
    InvalidAnalyzerOutput(String),

    /// No path exists from the entry terminal to the exit terminal.
    #[error("no path from entry to exit")]
    NoPath,

    /// A node sequence is not a valid path in the workflow graph.
    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// Underlying IO failure, with the path that caused it.
    #[error("io error: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ParseError {
            context: context.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
