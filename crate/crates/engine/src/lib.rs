//! Persona-ensemble wheel generation, risk classification and
//! deduplication on top of the model gateway.

mod classify;
mod dedup;
mod error;
mod generate;
pub mod lists;
mod persist;
mod pestel;
mod pipeline;
mod templates;
mod trace;
mod wheel;

pub use classify::{agent_risk_id, classify_items, classify_run, risk_lists, CLASSIFICATION_STEP};
pub use dedup::{
    dedup_across_runs, dedup_risks, DedupDecision, DedupOutcome, DuplicateJudge, ExactTextJudge, JudgeReply,
    LlmJudge, DEDUP_STEP,
};
pub use error::EngineError;
pub use generate::{generate_round, RoundOutput, Scope};
pub use persist::{accounting_csv, risks_csv, write_pipeline};
pub use pestel::{classify_pestel, PESTEL_STEP};
pub use pipeline::{run_one, run_pipeline, FailureEntry, JudgeKind, PipelineConfig, PipelineResult, RunOutcome};
pub use templates::PromptTemplates;
pub use trace::CallTrace;
pub use wheel::{run_wheel, WheelOutcome, GENERATION_STEP};
