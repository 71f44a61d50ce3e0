//! Chat completion: request type, scripted stand-in and remote adapter.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::Mutex;

use accord_core::metrics::TokenLogProbs;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ProviderError;
use crate::http::HttpClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Who is speaking, in which round and for what purpose. Routes scripted
/// responses; never sent over the wire.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScriptKey {
    pub agent: String,
    pub round: u32,
    pub stage: String,
}

impl ScriptKey {
    pub fn new(agent: impl Into<String>, round: u32, stage: impl Into<String>) -> Self {
        Self {
            agent: agent.into(),
            round,
            stage: stage.into(),
        }
    }
}

impl fmt::Display for ScriptKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/round {}/{}", self.agent, self.round, self.stage)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub key: ScriptKey,
    pub system_prompt: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(key: ScriptKey, system_prompt: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            key,
            system_prompt: system_prompt.into(),
            messages: vec![Message::user(user)],
            temperature: 0.7,
            max_tokens: 1024,
        }
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.messages.is_empty() {
            return Err(ProviderError::InvalidInput("chat request has no messages".into()));
        }
        if self.messages.iter().any(|m| m.role == Role::System) {
            return Err(ProviderError::InvalidInput(
                "system text belongs in system_prompt".into(),
            ));
        }
        if self.messages.windows(2).any(|w| w[0].role == w[1].role) {
            return Err(ProviderError::InvalidInput("message roles must alternate".into()));
        }
        if self.messages.last().map(|m| m.role) != Some(Role::User) {
            return Err(ProviderError::InvalidInput("last message must come from the user".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ProviderError::InvalidInput("temperature must be non-negative".into()));
        }
        if self.max_tokens == 0 {
            return Err(ProviderError::InvalidInput("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError>;
}

impl<C: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<C> {
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(req)
    }
}

impl<C: ChatProvider + ?Sized> ChatProvider for &C {
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(req)
    }
}

/// One queue of canned responses per key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(flatten)]
    pub key: ScriptKey,
    pub responses: Vec<String>,
}

/// Replays queued responses keyed by (agent, round, stage). Asking for a key
/// with nothing left is an error.
#[derive(Debug, Default)]
pub struct ScriptedChat {
    queues: Mutex<BTreeMap<ScriptKey, VecDeque<String>>>,
}

impl ScriptedChat {
    pub fn new(entries: impl IntoIterator<Item = ScriptEntry>) -> Self {
        let chat = Self::default();
        for e in entries {
            chat.push_all(e.key, e.responses);
        }
        chat
    }

    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let entries: Vec<ScriptEntry> = serde_json::from_str(text)
            .map_err(|e| ProviderError::InvalidInput(format!("chat script: {e}")))?;
        Ok(Self::new(entries))
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn push(&self, key: ScriptKey, response: impl Into<String>) {
        self.push_all(key, [response.into()]);
    }

    fn push_all(&self, key: ScriptKey, responses: impl IntoIterator<Item = String>) {
        self.queues
            .lock()
            .expect("script lock")
            .entry(key)
            .or_default()
            .extend(responses);
    }

    pub fn remaining(&self) -> usize {
        self.queues.lock().expect("script lock").values().map(VecDeque::len).sum()
    }
}

impl ChatProvider for ScriptedChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        req.validate()?;
        self.queues
            .lock()
            .expect("script lock")
            .get_mut(&req.key)
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| ProviderError::ScriptExhausted(req.key.to_string()))
    }
}

/// Chat-completions endpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteChatConfig {
    pub url: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Whether the endpoint can score a fixed continuation.
    #[serde(default)]
    pub supports_logprobs: bool,
}

pub struct RemoteChat {
    cfg: RemoteChatConfig,
    http: HttpClient,
}

impl RemoteChat {
    pub fn new(cfg: RemoteChatConfig, http: HttpClient) -> Self {
        Self { cfg, http }
    }

    fn wire_messages(req: &ChatRequest) -> Vec<serde_json::Value> {
        let mut out = Vec::with_capacity(req.messages.len() + 1);
        if !req.system_prompt.is_empty() {
            out.push(json!({"role": "system", "content": req.system_prompt}));
        }
        out.extend(req.messages.iter().map(|m| json!({"role": m.role, "content": m.content})));
        out
    }

    fn first_choice(v: &serde_json::Value) -> Result<&serde_json::Value, ProviderError> {
        v.get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| ProviderError::MalformedResponse("response has no choices".into()))
    }

    /// Per-token log-probabilities of `continuation` as the assistant turn
    /// after `context`, using the endpoint's echo mode.
    pub fn score(&self, context: &str, continuation: &str) -> Result<TokenLogProbs, ProviderError> {
        if !self.cfg.supports_logprobs {
            return Err(ProviderError::Capability(format!(
                "endpoint {} is not configured for log-probability scoring",
                self.cfg.url
            )));
        }
        let body = json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "user", "content": context},
                {"role": "assistant", "content": continuation},
            ],
            "temperature": 0.0,
            "max_tokens": 1,
            "logprobs": true,
            "echo": true,
        });
        let (v, _) = self.http.post_json(&self.cfg.url, self.cfg.api_key.as_deref(), &body)?;
        let entries = Self::first_choice(&v)?
            .pointer("/logprobs/content")
            .and_then(|c| c.as_array())
            .ok_or_else(|| ProviderError::Capability("response carries no logprobs".into()))?;
        let mut tokens = Vec::with_capacity(entries.len());
        let mut logprobs = Vec::with_capacity(entries.len());
        for e in entries {
            let (Some(t), Some(lp)) = (e.get("token").and_then(|t| t.as_str()), e.get("logprob").and_then(|l| l.as_f64())) else {
                return Err(ProviderError::MalformedResponse("logprob entry lacks token or logprob".into()));
            };
            tokens.push(t.to_owned());
            logprobs.push(lp);
        }
        TokenLogProbs::new(tokens, logprobs).map_err(|e| ProviderError::MalformedResponse(e.to_string()))
    }
}

impl ChatProvider for RemoteChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        req.validate()?;
        let body = json!({
            "model": self.cfg.model,
            "messages": Self::wire_messages(req),
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        });
        let (v, _) = self.http.post_json(&self.cfg.url, self.cfg.api_key.as_deref(), &body)?;
        Self::first_choice(&v)?
            .pointer("/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_owned)
            .ok_or_else(|| ProviderError::MalformedResponse("choice has no message content".into()))
    }
}
