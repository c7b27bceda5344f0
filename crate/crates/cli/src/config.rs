//! The operator config file.
//!
//! ```toml
//! version = 1
//! templates = "prompts"            # optional override directory
//!
//! [backend]
//! kind = "mock"                    # or "remote"
//! script = "chatbot_small.json"    # mock only, relative to this file
//! endpoint = "https://api.openai.com/v1"
//! api_key_env = "OPENAI_API_KEY"
//! retry_limit = 3
//! timeout_secs = 120
//!
//! [pipeline]
//! use_case = "chatbot-companion"
//! runs = 30
//! parallel = 4
//! pestel = true
//! judge = "model"                  # or "exact-text"
//!
//! [session]
//! persona = "curious"
//! chat_window = 6
//!
//! [[use_cases]]
//! id = "my-case"
//! name = "My case"
//! description = "..."
//! trl = 5
//! ```

use std::path::{Path, PathBuf};

use foresight_core::analytics::PlateauConfig;
use foresight_core::domain::{builtin_use_cases, Persona, UseCase};
use foresight_engine::{JudgeKind, PipelineConfig, PromptTemplates};
use foresight_gateway::{BackendConfig, BackendKind};
use foresight_session::SessionSettings;
use serde::Deserialize;

pub const CLI_CONFIG_VERSION: u32 = 1;
pub const DEFAULT_USE_CASE: &str = "chatbot-companion";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub use_case: Option<String>,
    pub personas: Option<Vec<Persona>>,
    pub runs: Option<u32>,
    pub parallel: Option<usize>,
    pub run_order: Option<Vec<u32>>,
    pub pestel: bool,
    pub judge: JudgeKind,
    pub plateau: Option<PlateauConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub version: u32,
    pub backend: BackendConfig,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(default)]
    pub session: SessionSettings,
    #[serde(default)]
    pub use_cases: Vec<UseCase>,
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(skip)]
    pub path: PathBuf,
}

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: CliConfig = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if cfg.version != CLI_CONFIG_VERSION {
            return Err(format!(
                "{}: unsupported config version {} (expected {CLI_CONFIG_VERSION})",
                path.display(),
                cfg.version
            ));
        }
        let base = path.parent();
        if let Some(script) = &cfg.backend.script {
            cfg.backend.script = Some(resolve(base, script));
        }
        if let Some(t) = &cfg.templates {
            cfg.templates = Some(resolve(base, t));
        }
        for uc in &cfg.use_cases {
            uc.validate().map_err(|e| e.to_string())?;
        }
        cfg.path = path.to_path_buf();
        Ok(cfg)
    }

    pub fn with_backend_kind(mut self, kind: Option<BackendKind>) -> Self {
        if let Some(k) = kind {
            self.backend.kind = k;
        }
        self
    }

    /// Built-in use cases, with entries from the config replacing or
    /// extending them.
    pub fn use_cases(&self) -> Vec<UseCase> {
        let mut all = builtin_use_cases();
        for uc in &self.use_cases {
            match all.iter_mut().find(|u| u.id == uc.id) {
                Some(slot) => *slot = uc.clone(),
                None => all.push(uc.clone()),
            }
        }
        all
    }

    pub fn templates(&self) -> Result<PromptTemplates, String> {
        match &self.templates {
            Some(dir) => PromptTemplates::with_overrides(dir).map_err(|e| e.to_string()),
            None => Ok(PromptTemplates::default()),
        }
    }

    pub fn pipeline(&self, use_case: Option<&str>, runs: Option<u32>, parallel: Option<usize>) -> Result<PipelineConfig, String> {
        let id = use_case
            .or(self.pipeline.use_case.as_deref())
            .unwrap_or(DEFAULT_USE_CASE);
        let uc = self
            .use_cases()
            .into_iter()
            .find(|u| u.id == id)
            .ok_or_else(|| format!("unknown use case `{id}`"))?;
        let p = &self.pipeline;
        let mut cfg = PipelineConfig::new(uc);
        if let Some(personas) = &p.personas {
            cfg.personas = personas.clone();
        }
        if let Some(r) = runs.or(p.runs) {
            cfg.runs = r;
        }
        if let Some(n) = parallel.or(p.parallel) {
            cfg.parallel = n;
        }
        cfg.run_order = p.run_order.clone();
        if runs.is_some() && cfg.run_order.as_ref().is_some_and(|o| o.len() != cfg.runs as usize) {
            cfg.run_order = None;
        }
        cfg.pestel = p.pestel;
        cfg.judge = p.judge;
        if let Some(pl) = p.plateau {
            cfg.plateau = pl;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}
