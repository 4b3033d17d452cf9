use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown field `{field}`")]
    UnknownField { line: usize, field: String },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Core(#[from] skewdet_core::Error),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Data(String),
}

impl IoError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        IoError::Parse { line, msg: msg.into() }
    }

    /// Wraps a serde error for `line`, pulling out unknown-field names.
    pub(crate) fn json(line: usize, source: serde_json::Error) -> Self {
        let text = source.to_string();
        if let Some(rest) = text.strip_prefix("unknown field `") {
            if let Some(end) = rest.find('`') {
                return IoError::UnknownField { line, field: rest[..end].to_string() };
            }
        }
        IoError::Json { line, source }
    }
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
