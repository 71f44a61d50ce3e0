//! Embedding-service adapter.

use accord_core::embedding::{normalize, EmbedError, Embedder};
use serde_json::json;

use crate::error::ProviderError;
use crate::http::HttpClient;

pub struct RemoteEmbedder {
    url: String,
    model: String,
    api_key: Option<String>,
    dimension: usize,
    http: HttpClient,
}

fn provider(e: ProviderError) -> EmbedError {
    let retryable = matches!(
        e,
        ProviderError::Transport { .. } | ProviderError::RateLimited { .. }
    ) || matches!(e, ProviderError::Http { status, .. } if status >= 500);
    EmbedError::Provider {
        attempts: e.attempts().unwrap_or(1),
        message: e.to_string(),
        retryable,
    }
}

impl RemoteEmbedder {
    pub fn new(
        url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        dimension: usize,
        http: HttpClient,
    ) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            api_key,
            dimension,
            http,
        }
    }

    fn malformed(&self, msg: &str) -> EmbedError {
        EmbedError::Provider {
            message: format!("{}: {msg}", self.url),
            attempts: 1,
            retryable: false,
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        self.embed_batch(&[text.to_owned()]).map(|mut v| v.remove(0))
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::InvalidInput("cannot embed empty text".into()));
        }
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = json!({"model": self.model, "input": texts});
        let (v, _) = self
            .http
            .post_json(&self.url, self.api_key.as_deref(), &body)
            .map_err(provider)?;
        let data = v
            .get("data")
            .and_then(|d| d.as_array())
            .ok_or_else(|| self.malformed("response has no data array"))?;
        let mut out: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for item in data {
            let index = item
                .get("index")
                .and_then(|i| i.as_u64())
                .ok_or_else(|| self.malformed("data item has no index"))? as usize;
            let vector: Vec<f64> = item
                .get("embedding")
                .and_then(|e| e.as_array())
                .ok_or_else(|| self.malformed("data item has no embedding"))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| self.malformed("non-numeric embedding entry")))
                .collect::<Result<_, _>>()?;
            if vector.len() != self.dimension {
                return Err(self.malformed(&format!(
                    "embedding has dimension {}, expected {}",
                    vector.len(),
                    self.dimension
                )));
            }
            let slot = out.get_mut(index).ok_or_else(|| self.malformed("index out of range"))?;
            *slot = Some(vector);
        }
        out.into_iter()
            .map(|v| {
                let mut v = v.ok_or_else(|| self.malformed("missing embedding for an input"))?;
                normalize(&mut v).map_err(|_| self.malformed("zero embedding"))?;
                Ok(v)
            })
            .collect()
    }
}
