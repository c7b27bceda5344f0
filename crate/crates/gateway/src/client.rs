use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use async_trait::async_trait;
use foresight_core::domain::{parse_jsonl, Record, RecordSchema, StepUsage};

use crate::config::Role;
use crate::{
    BackendConfig, BackendKind, CallContext, ChatRequest, ChatResponse, EmbedResponse, GatewayError, MockBackend,
    RawAttempt, RemoteBackend, Stage,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendEmbedding {
    pub vectors: Vec<Vec<f64>>,
    pub tokens_in: u64,
}

/// One provider. Implementations must not keep conversation state.
#[async_trait]
pub trait Backend: Send + Sync {
    async fn chat(&self, req: &ChatRequest, ctx: &CallContext, transport_attempt: u32) -> Result<BackendReply, GatewayError>;

    async fn embed(
        &self,
        texts: &[String],
        model: &str,
        ctx: &CallContext,
        transport_attempt: u32,
    ) -> Result<BackendEmbedding, GatewayError>;

    /// Deterministic backends report zero latency and zero cost.
    fn deterministic(&self) -> bool {
        false
    }
}

/// Parsed records plus everything the model said on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaReply {
    pub records: Vec<Record>,
    /// Raw text per parse attempt; the last one parsed.
    pub raw: Vec<String>,
    pub usage: StepUsage,
}

impl SchemaReply {
    pub fn attempts(&self) -> usize {
        self.raw.len()
    }
}

/// Entry point for all model traffic. Safe to share across tasks.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    config: BackendConfig,
    totals: Mutex<BTreeMap<Stage, StepUsage>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("kind", &self.config.kind).finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn from_config(config: BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let backend: Arc<dyn Backend> = match config.kind {
            BackendKind::Mock => {
                let path = config.script.as_ref().expect("validated");
                Arc::new(MockBackend::from_path(path)?)
            }
            BackendKind::Remote => Arc::new(RemoteBackend::new(&config)?),
        };
        Ok(Self::with_backend(config, backend))
    }

    pub fn with_backend(config: BackendConfig, backend: Arc<dyn Backend>) -> Self {
        Self {
            backend,
            config,
            totals: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// Request with the model and temperature configured for `stage`.
    pub fn request(&self, stage: Stage, system_text: impl Into<String>, user_text: impl Into<String>) -> ChatRequest {
        let role = Role::for_stage(stage);
        ChatRequest {
            model: self.config.models.model(role).to_string(),
            system_text: system_text.into(),
            user_text: user_text.into(),
            temperature: self.config.temperatures.for_role(role),
        }
    }

    /// Usage summed per stage over the gateway's lifetime.
    pub fn totals(&self) -> BTreeMap<Stage, StepUsage> {
        self.totals.lock().expect("totals lock").clone()
    }

    fn tally(&self, stage: Stage, usage: &StepUsage) {
        self.totals.lock().expect("totals lock").entry(stage).or_default().absorb(usage);
    }

    async fn backoff(&self, attempt: u32) {
        if !self.backend.deterministic() {
            tokio::time::sleep(Duration::from_millis(250u64 << attempt.min(6))).await;
        }
    }

    /// One stateless completion. Network errors, timeouts, 429 and 5xx are
    /// retried up to `retry_limit` extra times; auth errors are not.
    pub async fn complete_chat(&self, req: &ChatRequest, ctx: &CallContext) -> Result<ChatResponse, GatewayError> {
        let max = 1 + self.config.retry_limit;
        let started = Instant::now();
        let mut attempt = 1;
        let reply = loop {
            match self.backend.chat(req, ctx, attempt).await {
                Ok(r) => break r,
                Err(e) if e.is_retryable() && attempt < max => {
                    self.backoff(attempt).await;
                    attempt += 1;
                }
                Err(e) => {
                    self.tally(
                        ctx.stage,
                        &StepUsage {
                            calls: 1,
                            attempts: u64::from(attempt),
                            cost: self.backend.deterministic().then_some(0.0),
                            ..StepUsage::default()
                        },
                    );
                    return Err(e);
                }
            }
        };
        let (latency_secs, cost) = if self.backend.deterministic() {
            (0.0, Some(0.0))
        } else {
            (
                started.elapsed().as_secs_f64(),
                self.config.cost(&req.model, reply.tokens_in, reply.tokens_out),
            )
        };
        let resp = ChatResponse {
            text: reply.text,
            model: req.model.clone(),
            tokens_in: reply.tokens_in,
            tokens_out: reply.tokens_out,
            latency_secs,
            cost,
            attempts: attempt,
        };
        self.tally(ctx.stage, &usage_of(&resp));
        Ok(resp)
    }

    /// Completion parsed against `schema`. A reply that does not parse is
    /// re-requested with a corrective note, up to `retry_limit` extra times.
    pub async fn chat_with_schema(
        &self,
        req: &ChatRequest,
        schema: RecordSchema,
        ctx: &CallContext,
    ) -> Result<SchemaReply, GatewayError> {
        self.chat_with_schema_checked(req, schema, ctx, |_| Ok(())).await
    }

    /// As [`chat_with_schema`](Self::chat_with_schema), but a reply that
    /// parses and then fails `check` is re-requested the same way.
    pub async fn chat_with_schema_checked<F>(
        &self,
        req: &ChatRequest,
        schema: RecordSchema,
        ctx: &CallContext,
        check: F,
    ) -> Result<SchemaReply, GatewayError>
    where
        F: Fn(&[Record]) -> Result<(), String> + Send + Sync,
    {
        let max = 1 + self.config.retry_limit;
        let mut raw = Vec::new();
        let mut failed = Vec::new();
        let mut usage = StepUsage::default();
        for attempt in 1..=max {
            let ctx = CallContext { attempt, ..ctx.clone() };
            let req = match failed.last() {
                None => req.clone(),
                Some(RawAttempt { error, .. }) => ChatRequest {
                    user_text: format!("{}{}", req.user_text, corrective_note(schema, error)),
                    ..req.clone()
                },
            };
            let resp = self.complete_chat(&req, &ctx).await?;
            usage.absorb(&usage_of(&resp));
            raw.push(resp.text.clone());
            match parse_jsonl(&resp.text, schema).map_err(|e| e.to_string()).and_then(|records| {
                check(&records)?;
                Ok(records)
            }) {
                Ok(records) => return Ok(SchemaReply { records, raw, usage }),
                Err(error) => failed.push(RawAttempt {
                    attempt,
                    text: resp.text,
                    error,
                }),
            }
        }
        Err(GatewayError::ExhaustedRetries { schema, attempts: failed })
    }

    /// One vector per input, in input order.
    pub async fn embed_texts(&self, texts: &[String], ctx: &CallContext) -> Result<EmbedResponse, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::Precondition("embed_texts needs at least one text".into()));
        }
        let model = self.config.models.embedder.clone();
        let max = 1 + self.config.retry_limit;
        let started = Instant::now();
        let mut attempt = 1;
        let out = loop {
            match self.backend.embed(texts, &model, ctx, attempt).await {
                Ok(r) => break r,
                Err(e) if e.is_retryable() && attempt < max => {
                    self.backoff(attempt).await;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        if out.vectors.len() != texts.len() {
            return Err(GatewayError::Protocol(format!(
                "{} embeddings for {} inputs",
                out.vectors.len(),
                texts.len()
            )));
        }
        let (latency_secs, cost) = if self.backend.deterministic() {
            (0.0, Some(0.0))
        } else {
            (started.elapsed().as_secs_f64(), self.config.cost(&model, out.tokens_in, 0))
        };
        let resp = EmbedResponse {
            vectors: out.vectors,
            model,
            tokens_in: out.tokens_in,
            latency_secs,
            cost,
            attempts: attempt,
        };
        self.tally(
            ctx.stage,
            &StepUsage {
                calls: 1,
                attempts: u64::from(attempt),
                tokens_in: resp.tokens_in,
                tokens_out: 0,
                latency_secs,
                cost,
            },
        );
        Ok(resp)
    }
}

fn usage_of(resp: &ChatResponse) -> StepUsage {
    StepUsage {
        calls: 1,
        attempts: u64::from(resp.attempts),
        tokens_in: resp.tokens_in,
        tokens_out: resp.tokens_out,
        latency_secs: resp.latency_secs,
        cost: resp.cost,
    }
}

fn corrective_note(schema: RecordSchema, error: &str) -> String {
    let keys = schema.keys().iter().map(|k| format!("\"{k}\"")).collect::<Vec<_>>().join(", ");
    format!(
        "\n\nYour previous reply could not be parsed ({error}). Reply again with JSONL only: \
         one JSON object per line using exactly the keys {keys}, and no other text."
    )
}
