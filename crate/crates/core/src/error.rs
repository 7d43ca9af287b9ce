use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. The variants follow the failure
/// classes callers need to tell apart (bad input, bad dataset, network,
/// provider) rather than the module that raised them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid dipole: {0}")]
    InvalidDipole(String),

    #[error("invalid relation code: {0}")]
    InvalidRelation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("network error ({}): {message}", if *.retryable { "retryable" } else { "fatal" })]
    Network { message: String, retryable: bool },

    #[error("provider {provider} failed ({}): {message}", if *.retryable { "retryable" } else { "fatal" })]
    Provider {
        provider: String,
        message: String,
        retryable: bool,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("task definition error: {0}")]
    TaskDefinition(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::Network {
                retryable: true,
                ..
            } | Error::Provider {
                retryable: true,
                ..
            }
        )
    }

    /// True for failures that originate at a language-model provider.
    pub fn is_provider_failure(&self) -> bool {
        matches!(self, Error::Provider { .. })
    }
}

pub(crate) fn json_location(err: &serde_json::Error) -> String {
    format!("line {}, column {}", err.line(), err.column())
}
