use foresight_core::domain::{to_jsonl, Persona, Record, StepUsage};
use foresight_gateway::{GatewayError, SchemaReply, Stage};
use serde::{Deserialize, Serialize};

/// Raw and parsed text of one logical model call, kept for the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallTrace {
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<Persona>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Reply text per parse attempt.
    pub raw: Vec<String>,
    /// Accepted records re-serialised as JSONL.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl CallTrace {
    pub(crate) fn new(stage: Stage, persona: Option<Persona>, target: Option<String>) -> Self {
        Self {
            stage,
            persona,
            target,
            raw: Vec::new(),
            parsed: None,
            error: None,
            warning: None,
        }
    }

    pub(crate) fn ok(mut self, reply: &SchemaReply) -> Self {
        self.raw = reply.raw.clone();
        self.parsed = Some(to_jsonl(&reply.records));
        self
    }

    pub(crate) fn failed(mut self, err: &GatewayError) -> Self {
        if let GatewayError::ExhaustedRetries { attempts, .. } = err {
            self.raw = attempts.iter().map(|a| a.text.clone()).collect();
        }
        self.error = Some(err.to_string());
        self
    }

    pub(crate) fn records(&self) -> Option<&str> {
        self.parsed.as_deref()
    }
}

/// Outcome of one schema call: the records (if any), usage and trace.
pub(crate) struct Called {
    pub records: Result<Vec<Record>, GatewayError>,
    pub usage: StepUsage,
    pub trace: CallTrace,
}
