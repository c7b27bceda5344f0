use foresight_core::domain::RecordSchema;
use serde::{Deserialize, Serialize};

/// Raw text of one parse attempt and why it was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAttempt {
    pub attempt: u32,
    pub text: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("network error: {0}")]
    Network(String),
    #[error("request timed out after {0:.1}s")]
    Timeout(f64),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mock script: {0}")]
    Script(String),
    #[error("unexpected response shape: {0}")]
    Protocol(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{schema} output unparseable after {} attempts: {}", attempts.len(), attempts.last().map(|a| a.error.as_str()).unwrap_or(""))]
    ExhaustedRetries { schema: RecordSchema, attempts: Vec<RawAttempt> },
}

impl GatewayError {
    /// Transport failures worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::Network(_) | GatewayError::Timeout(_) => true,
            GatewayError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}
