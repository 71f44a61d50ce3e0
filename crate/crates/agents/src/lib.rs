//! Provider adapters, the best-response oracle and the negotiation driver.

pub mod chat;
pub mod config;
pub mod embed;
pub mod error;
pub mod http;
pub mod judge;
pub mod logprobs;
pub mod oracle;
pub mod orchestrator;
pub mod prompts;
pub mod synthetic;

pub use error::{AgentError, ProviderError, Result};
