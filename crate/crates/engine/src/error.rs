use foresight_core::domain::DomainError;
use foresight_gateway::{GatewayError, Stage};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{stage}: model referenced unknown id {id}")]
    UnknownId { stage: Stage, id: u32 },
    #[error("template `{name}`: {reason}")]
    Template { name: String, reason: String },
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("i/o error at {path}: {reason}")]
    Io { path: String, reason: String },
}

impl EngineError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        EngineError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }
}
