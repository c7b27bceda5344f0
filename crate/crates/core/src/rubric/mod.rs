//! Evaluation rubric: annotation cards, evaluator batches, record validation
//! and export of rating groups for the statistics.

mod batch;
mod card;
mod items;
mod record;

pub use batch::{
    assign_batches, AttentionCheck, Batch, BatchEntry, BatchPlan, BatchSpec, Cohort, EvaluatorProfile,
    Familiarity,
};
pub use card::{build_cards, cards_html, AnnotationCard, CardIndex, CardOrigin, CardQuestion, SYSTEMIC_RISK_DEFINITION};
pub use items::{Dimension, RatingDimension, Subdimension};
pub use record::{
    export_for_analytics, read_records_csv, read_records_jsonl, validate_record, AnnotationLedger,
    AnnotationRecord, GroupKey, LikertRatings, RatingGroups, RejectReason, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RubricError {
    #[error("risk `{0}` has no text")]
    MissingText(String),
    #[error("card id collision for risks `{0}` and `{1}`")]
    CardCollision(String, String),
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
    #[error("invalid batch spec: {0}")]
    InvalidSpec(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
