use foresight_engine::EngineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown use case `{0}`")]
    UnknownUseCase(String),
    #[error("no session `{0}`")]
    NotFound(String),
    #[error("no node {0}")]
    NodeNotFound(u32),
    #[error("{0}")]
    Depth(String),
    #[error("session is finalized")]
    Finalized,
    #[error("{0}")]
    Forbidden(String),
    #[error("{0}")]
    Invalid(String),
    #[error("session has no third-order consequences")]
    NoThirdOrder,
    #[error("node {0} has children")]
    HasChildren(u32),
    #[error("session `{0}` already exists")]
    Conflict(String),
    #[error("event {seq}: {reason}")]
    Replay { seq: u64, reason: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl SessionError {
    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    }

    /// Stable machine-readable code used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownUseCase(_) => "unknown_use_case",
            SessionError::NotFound(_) | SessionError::NodeNotFound(_) => "not_found",
            SessionError::Depth(_) => "depth_violation",
            SessionError::Finalized => "session_finalized",
            SessionError::Forbidden(_) => "forbidden",
            SessionError::Invalid(_) => "invalid_request",
            SessionError::NoThirdOrder => "no_third_order",
            SessionError::HasChildren(_) => "has_children",
            SessionError::Conflict(_) => "conflict",
            SessionError::Replay { .. } => "invalid_document",
            SessionError::Engine(_) => "backend_error",
            SessionError::Io { .. } => "storage_error",
        }
    }
}
