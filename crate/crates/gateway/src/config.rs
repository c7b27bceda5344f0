use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{GatewayError, Stage};

/// Current config file format version.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Generator,
    Classifier,
    Deduplicator,
    Embedder,
    Pestel,
}

impl Role {
    pub fn for_stage(stage: Stage) -> Role {
        match stage {
            Stage::Round1 | Stage::Round2 | Stage::Round3 | Stage::Chat => Role::Generator,
            Stage::Classify => Role::Classifier,
            Stage::DedupSelf | Stage::DedupCross => Role::Deduplicator,
            Stage::Pestel => Role::Pestel,
            Stage::Embed => Role::Embedder,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRoles {
    #[serde(default = "small_chat")]
    pub generator: String,
    #[serde(default = "small_chat")]
    pub classifier: String,
    #[serde(default = "reasoning_small")]
    pub deduplicator: String,
    #[serde(default = "embedding_small")]
    pub embedder: String,
    #[serde(default = "reasoning_large")]
    pub pestel: String,
}

fn small_chat() -> String {
    "gpt-4.1-mini".into()
}
fn reasoning_small() -> String {
    "o4-mini".into()
}
fn reasoning_large() -> String {
    "o3".into()
}
fn embedding_small() -> String {
    "text-embedding-3-small".into()
}

impl Default for ModelRoles {
    fn default() -> Self {
        Self {
            generator: small_chat(),
            classifier: small_chat(),
            deduplicator: reasoning_small(),
            embedder: embedding_small(),
            pestel: reasoning_large(),
        }
    }
}

impl ModelRoles {
    pub fn model(&self, role: Role) -> &str {
        match role {
            Role::Generator => &self.generator,
            Role::Classifier => &self.classifier,
            Role::Deduplicator => &self.deduplicator,
            Role::Embedder => &self.embedder,
            Role::Pestel => &self.pestel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Temperatures {
    #[serde(default = "unit")]
    pub generator: f64,
    #[serde(default = "unit")]
    pub classifier: f64,
    #[serde(default = "unit")]
    pub deduplicator: f64,
    #[serde(default = "unit")]
    pub pestel: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for Temperatures {
    fn default() -> Self {
        Self {
            generator: 1.0,
            classifier: 1.0,
            deduplicator: 1.0,
            pestel: 1.0,
        }
    }
}

impl Temperatures {
    pub fn for_role(&self, role: Role) -> f64 {
        match role {
            Role::Generator | Role::Embedder => self.generator,
            Role::Classifier => self.classifier,
            Role::Deduplicator => self.deduplicator,
            Role::Pestel => self.pestel,
        }
    }
}

/// Price per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Price {
    pub input_per_million: f64,
    #[serde(default)]
    pub output_per_million: f64,
}

/// Backend selection and model settings, read from a versioned TOML file.
///
/// ```toml
/// version = 1
/// kind = "mock"
/// script = "chatbot_small.json"   # relative to the config file
/// retry_limit = 3
/// timeout_secs = 120
///
/// [models]
/// generator = "gpt-4.1-mini"
///
/// [prices."gpt-4.1-mini"]
/// input_per_million = 0.4
/// output_per_million = 1.6
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    /// Defaults to the current version when omitted, e.g. inside a larger file.
    #[serde(default = "current_version")]
    pub version: u32,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Extra attempts after the first, for both transport and parse failures.
    #[serde(default = "default_retries")]
    pub retry_limit: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default)]
    pub models: ModelRoles,
    #[serde(default)]
    pub temperatures: Temperatures,
    #[serde(default)]
    pub prices: BTreeMap<String, Price>,
}

fn current_version() -> u32 {
    CONFIG_VERSION
}

fn default_retries() -> u32 {
    3
}
fn default_timeout() -> f64 {
    120.0
}

impl BackendConfig {
    pub fn mock(script: impl Into<PathBuf>) -> Self {
        Self {
            version: CONFIG_VERSION,
            kind: BackendKind::Mock,
            script: Some(script.into()),
            endpoint: None,
            api_key_env: None,
            retry_limit: default_retries(),
            timeout_secs: default_timeout(),
            models: ModelRoles::default(),
            temperatures: Temperatures::default(),
            prices: BTreeMap::new(),
        }
    }

    pub fn remote(endpoint: impl Into<String>, api_key_env: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Remote,
            script: None,
            endpoint: Some(endpoint.into()),
            api_key_env: Some(api_key_env.into()),
            ..Self::mock("")
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, GatewayError> {
        let cfg: Self = toml::from_str(text).map_err(|e| GatewayError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; a relative script path is resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(script), Some(dir)) = (&cfg.script, path.parent()) {
            if script.is_relative() {
                cfg.script = Some(dir.join(script));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.version != CONFIG_VERSION {
            return Err(GatewayError::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        match self.kind {
            BackendKind::Mock => {
                if self.script.as_ref().is_none_or(|s| s.as_os_str().is_empty()) {
                    return Err(GatewayError::Config("mock backend requires `script`".into()));
                }
            }
            BackendKind::Remote => {
                if self.endpoint.as_deref().is_none_or(str::is_empty) {
                    return Err(GatewayError::Config("remote backend requires `endpoint`".into()));
                }
                if self.api_key_env.as_deref().is_none_or(str::is_empty) {
                    return Err(GatewayError::Config("remote backend requires `api_key_env`".into()));
                }
            }
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(GatewayError::Config("`timeout_secs` must be positive".into()));
        }
        let temps = &self.temperatures;
        for t in [temps.generator, temps.classifier, temps.deduplicator, temps.pestel] {
            if t.is_nan() || t < 0.0 {
                return Err(GatewayError::Config(format!("temperature {t} is negative")));
            }
        }
        Ok(())
    }

    pub fn cost(&self, model: &str, tokens_in: u64, tokens_out: u64) -> Option<f64> {
        self.prices
            .get(model)
            .map(|p| (tokens_in as f64 * p.input_per_million + tokens_out as f64 * p.output_per_million) / 1e6)
    }
}
