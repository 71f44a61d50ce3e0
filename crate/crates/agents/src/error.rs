use accord_core::embedding::EmbedError;
use thiserror::Error;

/// Failures of an external capability (chat, log-probs, judging).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },

    #[error("rate limited on all {attempts} attempt(s)")]
    RateLimited { attempts: u32 },

    #[error("http status {status} after {attempts} attempt(s): {body}")]
    Http {
        status: u16,
        body: String,
        attempts: u32,
    },

    #[error("malformed provider response: {0}")]
    MalformedResponse(String),

    #[error("script exhausted for {0}")]
    ScriptExhausted(String),

    #[error("capability not supported: {0}")]
    Capability(String),

    #[error("judge output unparseable after {attempts} attempt(s): {raw:?}")]
    Judging { raw: String, attempts: u32 },
}

impl ProviderError {
    pub fn attempts(&self) -> Option<u32> {
        match self {
            ProviderError::Transport { attempts, .. }
            | ProviderError::RateLimited { attempts }
            | ProviderError::Http { attempts, .. }
            | ProviderError::Judging { attempts, .. } => Some(*attempts),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error(transparent)]
    Core(#[from] accord_core::error::Error),

    #[error(transparent)]
    Embed(#[from] EmbedError),

    #[error(transparent)]
    Provider(#[from] ProviderError),

    #[error("oracle failed for {culture}: {message}")]
    Oracle { culture: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),
}

impl AgentError {
    /// True for failures of an external service rather than of the input.
    /// A model that returns nothing usable counts as a failing service.
    pub fn is_provider(&self) -> bool {
        match self {
            AgentError::Provider(p) => !matches!(p, ProviderError::InvalidInput(_)),
            AgentError::Embed(EmbedError::Provider { .. }) | AgentError::Oracle { .. } => true,
            _ => false,
        }
    }
}

pub type Result<T, E = AgentError> = std::result::Result<T, E>;
