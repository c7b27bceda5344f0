use std::time::Duration;

use async_trait::async_trait;
use serde_json::{json, Value};

use crate::client::{Backend, BackendEmbedding, BackendReply};
use crate::{BackendConfig, CallContext, ChatRequest, GatewayError};

/// OpenAI-compatible HTTP backend (`/chat/completions`, `/embeddings`).
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    http: reqwest::Client,
    endpoint: String,
    api_key: String,
    timeout_secs: f64,
}

impl RemoteBackend {
    /// Reads the key from the configured environment variable; a missing or
    /// empty variable is an auth error naming it.
    pub fn new(cfg: &BackendConfig) -> Result<Self, GatewayError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| GatewayError::Config("remote backend requires `endpoint`".into()))?;
        let var = cfg
            .api_key_env
            .clone()
            .ok_or_else(|| GatewayError::Config("remote backend requires `api_key_env`".into()))?;
        let api_key = match std::env::var(&var) {
            Ok(k) if !k.trim().is_empty() => k,
            _ => return Err(GatewayError::Auth(format!("environment variable `{var}` is not set"))),
        };
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            http,
            endpoint: endpoint.trim_end_matches('/').to_string(),
            api_key,
            timeout_secs: cfg.timeout_secs,
        })
    }

    async fn post(&self, path: &str, body: Value) -> Result<Value, GatewayError> {
        let resp = self
            .http
            .post(format!("{}/{path}", self.endpoint))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| {
                if e.is_timeout() {
                    GatewayError::Timeout(self.timeout_secs)
                } else {
                    GatewayError::Network(e.to_string())
                }
            })?;
        let status = resp.status().as_u16();
        let text = resp.text().await.map_err(|e| GatewayError::Network(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&text).map_err(|e| GatewayError::Protocol(e.to_string())),
            401 | 403 => Err(GatewayError::Auth(format!("HTTP {status}: {text}"))),
            _ => Err(GatewayError::Http { status, body: text }),
        }
    }
}

fn usage(v: &Value, key: &str) -> u64 {
    v.pointer(&format!("/usage/{key}")).and_then(Value::as_u64).unwrap_or(0)
}

#[async_trait]
impl Backend for RemoteBackend {
    async fn chat(&self, req: &ChatRequest, _ctx: &CallContext, _attempt: u32) -> Result<BackendReply, GatewayError> {
        let mut messages = Vec::new();
        if !req.system_text.is_empty() {
            messages.push(json!({"role": "system", "content": req.system_text}));
        }
        messages.push(json!({"role": "user", "content": req.user_text}));
        let body = json!({"model": req.model, "messages": messages, "temperature": req.temperature});
        let v = self.post("chat/completions", body).await?;
        let text = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| GatewayError::Protocol("missing choices[0].message.content".into()))?
            .to_string();
        Ok(BackendReply {
            text,
            tokens_in: usage(&v, "prompt_tokens"),
            tokens_out: usage(&v, "completion_tokens"),
        })
    }

    async fn embed(
        &self,
        texts: &[String],
        model: &str,
        _ctx: &CallContext,
        _attempt: u32,
    ) -> Result<BackendEmbedding, GatewayError> {
        let v = self.post("embeddings", json!({"model": model, "input": texts})).await?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| GatewayError::Protocol("missing `data` array".into()))?;
        let mut vectors = vec![None; texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let idx = item.get("index").and_then(Value::as_u64).map_or(pos, |i| i as usize);
            let values: Vec<f64> = item
                .get("embedding")
                .and_then(Value::as_array)
                .ok_or_else(|| GatewayError::Protocol(format!("item {pos} has no embedding")))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| GatewayError::Protocol("non-numeric embedding".into())))
                .collect::<Result<_, _>>()?;
            let slot = vectors
                .get_mut(idx)
                .ok_or_else(|| GatewayError::Protocol(format!("embedding index {idx} out of range")))?;
            *slot = Some(values);
        }
        let vectors = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| GatewayError::Protocol(format!("no embedding returned for input {i}"))))
            .collect::<Result<_, _>>()?;
        Ok(BackendEmbedding {
            vectors,
            tokens_in: usage(&v, "prompt_tokens"),
        })
    }
}
