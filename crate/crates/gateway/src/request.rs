use std::fmt;

use foresight_core::domain::Persona;
use serde::{Deserialize, Serialize};

/// Pipeline step a call belongs to; also the mock script's primary key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Round1,
    Round2,
    Round3,
    Classify,
    DedupSelf,
    DedupCross,
    Pestel,
    Chat,
    Embed,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Round1 => "round1",
            Stage::Round2 => "round2",
            Stage::Round3 => "round3",
            Stage::Classify => "classify",
            Stage::DedupSelf => "dedup-self",
            Stage::DedupCross => "dedup-cross",
            Stage::Pestel => "pestel",
            Stage::Chat => "chat",
            Stage::Embed => "embed",
        }
    }

    pub fn round(round: u8) -> Option<Stage> {
        match round {
            1 => Some(Stage::Round1),
            2 => Some(Stage::Round2),
            3 => Some(Stage::Round3),
            _ => None,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Who is calling and why. Not sent to remote providers; used for mock
/// lookup, logging and accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallContext {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub use_case: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<Persona>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<u32>,
    /// Free-form discriminator, e.g. which accumulator step of a dedup.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// 1-based parse attempt, set by `chat_with_schema`.
    #[serde(default = "one")]
    pub attempt: u32,
}

fn one() -> u32 {
    1
}

impl CallContext {
    pub fn new(stage: Stage) -> Self {
        Self {
            stage,
            use_case: None,
            persona: None,
            run: None,
            target: None,
            attempt: 1,
        }
    }

    pub fn use_case(mut self, id: impl Into<String>) -> Self {
        self.use_case = Some(id.into());
        self
    }

    pub fn persona(mut self, p: Persona) -> Self {
        self.persona = Some(p);
        self
    }

    pub fn run(mut self, run: u32) -> Self {
        self.run = Some(run);
        self
    }

    pub fn target(mut self, t: impl Into<String>) -> Self {
        self.target = Some(t.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub model: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub latency_secs: f64,
    /// `None` when the price table does not cover the model.
    pub cost: Option<f64>,
    /// Transport attempts, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub model: String,
    pub tokens_in: u64,
    pub latency_secs: f64,
    pub cost: Option<f64>,
    pub attempts: u32,
}
