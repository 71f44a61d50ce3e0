//! Run configuration: a TOML file, then environment overrides. Command-line
//! flags are applied on top by the caller.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use accord_core::embedding::{Embedder, EmbeddingKind, EmbeddingProviderConfig};
use accord_core::solver::SolverConfig;
use accord_core::types::UtilityConfig;
use serde::{Deserialize, Serialize};

use crate::chat::{RemoteChat, RemoteChatConfig};
use crate::embed::RemoteEmbedder;
use crate::error::{AgentError, Result};
use crate::http::{HttpClient, RetryPolicy, UreqTransport};
use crate::oracle::OracleConfig;
use crate::orchestrator::GameConfig;

pub const ENV_PROVIDER: &str = "ACCORD_PROVIDER";
pub const ENV_BASE_URL: &str = "ACCORD_BASE_URL";
pub const ENV_API_KEY: &str = "ACCORD_API_KEY";
pub const ENV_CHAT_MODEL: &str = "ACCORD_CHAT_MODEL";
pub const ENV_JUDGE_MODEL: &str = "ACCORD_JUDGE_MODEL";
pub const ENV_EMBEDDING_MODEL: &str = "ACCORD_EMBEDDING_MODEL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    #[default]
    Scripted,
    Remote,
}

impl std::str::FromStr for ProviderMode {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scripted" => Ok(ProviderMode::Scripted),
            "remote" => Ok(ProviderMode::Remote),
            other => Err(AgentError::Config(format!("unknown provider mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderSettings {
    pub mode: ProviderMode,
    /// Root of an OpenAI-style API, e.g. `https://host/v1`.
    pub base_url: Option<String>,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub chat_model: Option<String>,
    pub judge_model: Option<String>,
    pub embedding_model: Option<String>,
    pub embedding_dimension: usize,
    pub supports_logprobs: bool,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Scripted,
            base_url: None,
            api_key: None,
            chat_model: None,
            judge_model: None,
            embedding_model: None,
            embedding_dimension: 1024,
            supports_logprobs: false,
            timeout_secs: 120,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSettings {
    pub max_rounds: u32,
    pub initial_guidelines: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_nov: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub smoothing_gamma: f64,
    pub oracle: OracleConfig,
}

impl Default for GameSettings {
    fn default() -> Self {
        let s = SolverConfig::<f64>::default();
        Self {
            max_rounds: 8,
            initial_guidelines: 1,
            alpha: 5.0,
            beta: 5.0,
            gamma_nov: 2.0,
            epsilon: 0.0,
            eta: s.eta,
            max_iters: s.max_iters,
            tolerance: s.tolerance,
            smoothing_gamma: s.smoothing_gamma,
            oracle: OracleConfig::default(),
        }
    }
}

impl GameSettings {
    pub fn to_game_config(&self) -> Result<GameConfig> {
        let cfg = GameConfig {
            utility: UtilityConfig::new(self.alpha, self.beta, self.gamma_nov, self.epsilon)?,
            solver: SolverConfig {
                eta: self.eta,
                max_iters: self.max_iters,
                tolerance: self.tolerance,
                smoothing_gamma: self.smoothing_gamma,
                ..SolverConfig::default()
            },
            max_rounds: self.max_rounds,
            initial_guidelines: self.initial_guidelines,
            oracle: self.oracle,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub provider: ProviderSettings,
    pub game: GameSettings,
}

impl AppConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AgentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies `ACCORD_*` variables read through `get`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        let p = &mut self.provider;
        if let Some(v) = get(ENV_PROVIDER) {
            p.mode = v.parse()?;
        }
        for (var, slot) in [
            (ENV_BASE_URL, &mut p.base_url),
            (ENV_API_KEY, &mut p.api_key),
            (ENV_CHAT_MODEL, &mut p.chat_model),
            (ENV_JUDGE_MODEL, &mut p.judge_model),
            (ENV_EMBEDDING_MODEL, &mut p.embedding_model),
        ] {
            if let Some(v) = get(var) {
                *slot = Some(v);
            }
        }
        Ok(())
    }

    pub fn apply_process_env(&mut self) -> Result<()> {
        self.apply_env(|k| std::env::var(k).ok())
    }
}

fn require<'a>(v: &'a Option<String>, what: &str) -> Result<&'a str> {
    v.as_deref()
        .ok_or_else(|| AgentError::Config(format!("remote mode needs {what}")))
}

impl ProviderSettings {
    pub fn http_client(&self) -> Result<HttpClient> {
        self.retry.validate().map_err(AgentError::Config)?;
        let transport = Arc::new(UreqTransport::new(Duration::from_secs(self.timeout_secs)));
        Ok(HttpClient::new(transport, self.retry, self.max_in_flight))
    }

    fn url(&self, path: &str) -> Result<String> {
        let base = require(&self.base_url, "a base URL")?;
        Ok(format!("{}/{path}", base.trim_end_matches('/')))
    }

    pub fn remote_chat(&self, http: HttpClient, judge: bool) -> Result<RemoteChat> {
        let model = if judge {
            self.judge_model.as_ref().or(self.chat_model.as_ref())
        } else {
            self.chat_model.as_ref()
        };
        let model = model.ok_or_else(|| AgentError::Config("remote mode needs a chat model".into()))?;
        Ok(RemoteChat::new(
            RemoteChatConfig {
                url: self.url("chat/completions")?,
                model: model.clone(),
                api_key: self.api_key.clone(),
                supports_logprobs: self.supports_logprobs,
            },
            http,
        ))
    }

    pub fn embedding_config(&self) -> Result<EmbeddingProviderConfig> {
        let cfg = match self.mode {
            ProviderMode::Scripted => EmbeddingProviderConfig::deterministic(),
            ProviderMode::Remote => EmbeddingProviderConfig {
                kind: EmbeddingKind::Remote,
                dimension: self.embedding_dimension,
                endpoint: Some(self.url("embeddings")?),
                model: Some(require(&self.embedding_model, "an embedding model")?.to_owned()),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn remote_embedder(&self, http: HttpClient) -> Result<RemoteEmbedder> {
        let cfg = self.embedding_config()?;
        let (Some(url), Some(model)) = (cfg.endpoint, cfg.model) else {
            return Err(AgentError::Config("remote embedder needs an endpoint and a model".into()));
        };
        Ok(RemoteEmbedder::new(url, model, self.api_key.clone(), cfg.dimension, http))
    }

    /// Boxed embedder for the configured mode.
    pub fn embedder(&self) -> Result<Box<dyn Embedder>> {
        match self.mode {
            ProviderMode::Scripted => Ok(Box::new(accord_core::embedding::DeterministicEmbedder::new())),
            ProviderMode::Remote => Ok(Box::new(self.remote_embedder(self.http_client()?)?)),
        }
    }
}
