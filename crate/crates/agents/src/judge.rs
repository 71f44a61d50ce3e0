//! Value-stance judging over the ten Schwartz dimensions.

use std::collections::BTreeMap;

use accord_core::metrics::{ValueVector, SCHWARTZ_VALUES};

use crate::chat::{ChatProvider, ChatRequest, ScriptKey};
use crate::error::ProviderError;
use crate::prompts::PromptSet;

pub trait ValueJudge: Send + Sync {
    fn judge_value_vector(&self, response_text: &str) -> Result<ValueVector, ProviderError>;
}

/// Strict parser: exactly ten whitespace-separated tokens from
/// `-1`, `0`, `+1`, `1`, optionally surrounded by whitespace.
pub fn parse_judgement(raw: &str) -> Option<ValueVector> {
    raw.trim().parse().ok()
}

/// Vectors looked up by exact response text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptedJudge {
    table: BTreeMap<String, ValueVector>,
}

impl ScriptedJudge {
    pub fn new(table: BTreeMap<String, ValueVector>) -> Self {
        Self { table }
    }

    /// Reads a JSON object mapping response text to a stance string such as
    /// `"+1 0 0 0 0 0 0 0 0 -1"`.
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| ProviderError::InvalidInput(format!("stance table: {e}")))?;
        let mut table = BTreeMap::new();
        for (k, v) in raw {
            let vv = parse_judgement(&v)
                .ok_or_else(|| ProviderError::InvalidInput(format!("stance table entry {v:?}")))?;
            table.insert(k, vv);
        }
        Ok(Self { table })
    }

    pub fn insert(&mut self, text: impl Into<String>, v: ValueVector) {
        self.table.insert(text.into(), v);
    }
}

impl ValueJudge for ScriptedJudge {
    fn judge_value_vector(&self, response_text: &str) -> Result<ValueVector, ProviderError> {
        if response_text.trim().is_empty() {
            return Err(ProviderError::InvalidInput("response text is empty".into()));
        }
        self.table
            .get(response_text)
            .copied()
            .ok_or_else(|| ProviderError::ScriptExhausted(format!("no stance for {response_text:?}")))
    }
}

/// Asks a chat model with the fixed rubric; malformed answers are retried
/// `retries` more times before failing with the last raw output.
pub struct ChatJudge<C> {
    chat: C,
    prompts: PromptSet,
    pub retries: u32,
}

pub const JUDGE_RETRIES: u32 = 2;

impl<C: ChatProvider> ChatJudge<C> {
    pub fn new(chat: C) -> Self {
        Self {
            chat,
            prompts: PromptSet::bundled(),
            retries: JUDGE_RETRIES,
        }
    }

    pub fn rubric(&self, response_text: &str) -> Result<String, ProviderError> {
        let values: Vec<String> = SCHWARTZ_VALUES
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{}. {v}", i + 1))
            .collect();
        PromptSet::render(&self.prompts.judge, &[("values", &values.join("\n")), ("response", response_text)])
            .map_err(|e| ProviderError::InvalidInput(e.to_string()))
    }
}

impl<C: ChatProvider> ValueJudge for ChatJudge<C> {
    fn judge_value_vector(&self, response_text: &str) -> Result<ValueVector, ProviderError> {
        if response_text.trim().is_empty() {
            return Err(ProviderError::InvalidInput("response text is empty".into()));
        }
        let req = ChatRequest::new(ScriptKey::new("judge", 0, "judge"), "", self.rubric(response_text)?)
            .with_temperature(0.0);
        let attempts = self.retries + 1;
        let mut raw = String::new();
        for attempt in 1..=attempts {
            raw = self.chat.complete(&req)?;
            if let Some(v) = parse_judgement(&raw) {
                return Ok(v);
            }
            log::warn!("judge output unparseable (attempt {attempt}/{attempts}): {raw:?}");
        }
        Err(ProviderError::Judging { raw, attempts })
    }
}
