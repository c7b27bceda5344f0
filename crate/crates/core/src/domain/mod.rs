//! Shared domain model: use cases, wheel consequences, risks, and the strict
//! JSONL record grammar spoken by every agent-facing prompt.

mod catalog;
mod ids;
pub mod jsonl;
mod types;
mod validate;

pub use catalog::builtin_use_cases;
pub use ids::{assign_ids, ConsequenceDraft};
pub use jsonl::{parse_jsonl, to_jsonl, JsonlError, Record, RecordSchema};
pub use types::*;
pub use validate::{validate_wheel, ValidationReport, Violation};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("invalid use case: {0}")]
    InvalidUseCase(String),
    #[error("unknown persona `{0}`")]
    UnknownPersona(String),
    #[error("unknown classification label `{0}`")]
    UnknownLabel(String),
    #[error("unknown PESTEL category `{0}`")]
    UnknownPestel(String),
    #[error("unknown risk source `{0}`")]
    UnknownSource(String),
    #[error("record {index}: dangling parent: {order} order id {parent} does not exist")]
    DanglingParent { index: usize, order: Order, parent: u32 },
    #[error("record {index}: {reason}")]
    MalformedDraft { index: usize, reason: String },
}
