use sdp_tensor::TensorError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("data error: {0}")]
    Data(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("significance: {0}")]
    Significance(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }

    /// Short machine-readable category used by the command-line tool.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Format { .. } => "format",
            Error::Data(_) => "data",
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::Diverged(_) => "diverged",
            Error::Significance(_) => "significance",
            Error::Tensor(_) => "tensor",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
