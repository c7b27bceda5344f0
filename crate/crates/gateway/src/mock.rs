use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use foresight_core::domain::Persona;
use serde::{Deserialize, Serialize};

use crate::client::{Backend, BackendEmbedding, BackendReply};
use crate::{CallContext, ChatRequest, GatewayError, Stage};

const DEFAULT_DIM: usize = 64;

/// Selector for a script entry. Unset fields match anything; among matching
/// entries the one with the most set fields wins, then the earliest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockKey {
    pub stage: Option<Stage>,
    #[serde(default)]
    pub persona: Option<Persona>,
    #[serde(default)]
    pub use_case: Option<String>,
    #[serde(default)]
    pub run: Option<u32>,
    #[serde(default)]
    pub target: Option<String>,
}

impl MockKey {
    fn matches(&self, ctx: &CallContext) -> bool {
        self.stage.is_none_or(|s| s == ctx.stage)
            && self.persona.is_none_or(|p| Some(p) == ctx.persona)
            && self.use_case.as_ref().is_none_or(|u| Some(u) == ctx.use_case.as_ref())
            && self.run.is_none_or(|r| Some(r) == ctx.run)
            && self.target.as_ref().is_none_or(|t| Some(t) == ctx.target.as_ref())
    }

    fn specificity(&self) -> usize {
        usize::from(self.stage.is_some())
            + usize::from(self.persona.is_some())
            + usize::from(self.use_case.is_some())
            + usize::from(self.run.is_some())
            + usize::from(self.target.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Network,
    Timeout,
    Auth,
    ServerError,
}

/// Transport failures injected before the scripted text is returned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSpec {
    pub kind: FailureKind,
    /// 1-based transport attempts that fail; empty means every attempt.
    #[serde(default)]
    pub attempts: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockEntry {
    #[serde(default)]
    pub key: MockKey,
    /// Reply per parse attempt; the last one repeats.
    #[serde(default)]
    pub responses: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail: Option<FailureSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub embedding_dim: Option<usize>,
    pub entries: Vec<MockEntry>,
}

impl MockScript {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Script(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))
    }

    pub fn lookup(&self, ctx: &CallContext) -> Option<&MockEntry> {
        let mut best: Option<&MockEntry> = None;
        for e in self.entries.iter().filter(|e| e.key.matches(ctx)) {
            if best.is_none_or(|b| e.key.specificity() > b.key.specificity()) {
                best = Some(e);
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedCall {
    pub context: CallContext,
    pub transport_attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<ChatRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub texts: Vec<String>,
}

/// L2-normalised character histogram, folded into `dim` buckets.
pub fn bag_of_characters(text: &str, dim: usize) -> Vec<f64> {
    let dim = dim.max(1);
    let mut v = vec![0.0; dim];
    for c in text.chars().flat_map(char::to_lowercase) {
        v[c as usize % dim] += 1.0;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn words(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

/// Scripted backend. Replies depend only on the call context, so results are
/// identical across runs regardless of scheduling.
#[derive(Debug, Default)]
pub struct MockBackend {
    script: MockScript,
    calls: Mutex<Vec<RecordedCall>>,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self {
            script,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, GatewayError> {
        MockScript::load(path).map(Self::new)
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    /// Every call received so far, in arrival order.
    pub fn recorded(&self) -> Vec<RecordedCall> {
        self.calls.lock().expect("recorder lock").clone()
    }

    fn record(&self, call: RecordedCall) {
        self.calls.lock().expect("recorder lock").push(call);
    }

    fn check_failure(entry: Option<&MockEntry>, transport_attempt: u32) -> Result<(), GatewayError> {
        let Some(fail) = entry.and_then(|e| e.fail.as_ref()) else {
            return Ok(());
        };
        if !fail.attempts.is_empty() && !fail.attempts.contains(&transport_attempt) {
            return Ok(());
        }
        Err(match fail.kind {
            FailureKind::Network => GatewayError::Network("scripted connection reset".into()),
            FailureKind::Timeout => GatewayError::Timeout(0.0),
            FailureKind::Auth => GatewayError::Auth("scripted credential rejection".into()),
            FailureKind::ServerError => GatewayError::Http {
                status: 503,
                body: "scripted outage".into(),
            },
        })
    }
}

#[async_trait]
impl Backend for MockBackend {
    async fn chat(&self, req: &ChatRequest, ctx: &CallContext, transport_attempt: u32) -> Result<BackendReply, GatewayError> {
        self.record(RecordedCall {
            context: ctx.clone(),
            transport_attempt,
            request: Some(req.clone()),
            texts: Vec::new(),
        });
        let entry = self.script.lookup(ctx);
        Self::check_failure(entry, transport_attempt)?;
        let entry = entry.ok_or_else(|| {
            GatewayError::Script(format!(
                "no entry for {}",
                serde_json::to_string(ctx).unwrap_or_else(|_| ctx.stage.to_string())
            ))
        })?;
        let idx = (ctx.attempt.max(1) as usize - 1).min(entry.responses.len().saturating_sub(1));
        let text = entry
            .responses
            .get(idx)
            .cloned()
            .ok_or_else(|| GatewayError::Script(format!("entry for {} has no responses", ctx.stage)))?;
        Ok(BackendReply {
            tokens_in: words(&req.system_text) + words(&req.user_text),
            tokens_out: words(&text),
            text,
        })
    }

    async fn embed(
        &self,
        texts: &[String],
        _model: &str,
        ctx: &CallContext,
        transport_attempt: u32,
    ) -> Result<BackendEmbedding, GatewayError> {
        self.record(RecordedCall {
            context: ctx.clone(),
            transport_attempt,
            request: None,
            texts: texts.to_vec(),
        });
        Self::check_failure(self.script.lookup(ctx), transport_attempt)?;
        let dim = self.script.embedding_dim.unwrap_or(DEFAULT_DIM);
        Ok(BackendEmbedding {
            vectors: texts.iter().map(|t| bag_of_characters(t, dim)).collect(),
            tokens_in: texts.iter().map(|t| words(t)).sum(),
        })
    }

    fn deterministic(&self) -> bool {
        true
    }
}
