//! Text embedding behind a provider abstraction.
//!
//! [`DeterministicEmbedder`] is the offline embedder: signed feature hashing of
//! word unigrams and bigrams into 256 buckets, L2-normalized. Remote providers
//! implement [`Embedder`] elsewhere and are usually wrapped in a
//! [`CachedEmbedder`].

use std::collections::HashMap;
use std::hash::Hasher;
use std::path::Path;
use std::sync::RwLock;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::scalar::{dot, l2_norm, Scalar};

pub const DETERMINISTIC_DIMENSION: usize = 256;
pub const MIN_DIMENSION: usize = 8;

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine_similarity<T: Scalar>(a: &[T], b: &[T]) -> Result<T, Error> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == T::zero() || nb == T::zero() {
        return Err(Error::invalid("cosine similarity of a zero vector"));
    }
    let c = dot(a, b) / (na * nb);
    if !c.is_finite() {
        return Err(Error::invalid("cosine similarity is not finite"));
    }
    Ok(c.max(-T::one()).min(T::one()))
}

/// Scales `v` to unit L2 norm in place.
pub fn normalize<T: Scalar>(v: &mut [T]) -> Result<(), Error> {
    let n = l2_norm(v);
    if n == T::zero() || !n.is_finite() {
        return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("embedding provider failed after {attempts} attempt(s): {message}")]
    Provider {
        message: String,
        attempts: u32,
        retryable: bool,
    },
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// Unit-norm embedding of `text`.
    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError>;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

impl<E: Embedder + ?Sized> Embedder for std::sync::Arc<E> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        (**self).embed(text)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        (**self).embed_batch(texts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Deterministic,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingProviderConfig {
    pub kind: EmbeddingKind,
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl EmbeddingProviderConfig {
    pub fn deterministic() -> Self {
        Self {
            kind: EmbeddingKind::Deterministic,
            dimension: DETERMINISTIC_DIMENSION,
            endpoint: None,
            model: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.dimension < MIN_DIMENSION {
            return Err(Error::invalid(format!(
                "embedding dimension {} is below {MIN_DIMENSION}",
                self.dimension
            )));
        }
        match self.kind {
            EmbeddingKind::Deterministic if self.dimension != DETERMINISTIC_DIMENSION => {
                Err(Error::invalid(format!(
                    "deterministic embedder dimension is fixed at {DETERMINISTIC_DIMENSION}"
                )))
            }
            EmbeddingKind::Remote if self.endpoint.is_none() || self.model.is_none() => Err(
                Error::invalid("remote embedder needs an endpoint and a model"),
            ),
            _ => Ok(()),
        }
    }
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DeterministicEmbedder;

impl DeterministicEmbedder {
    pub fn new() -> Self {
        Self
    }

    fn add_feature(v: &mut [f64], feature: &str) {
        let mut h = FnvHasher::default();
        h.write(feature.as_bytes());
        let h = h.finish();
        let bucket = (h % DETERMINISTIC_DIMENSION as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[bucket] += sign;
    }
}

impl Embedder for DeterministicEmbedder {
    fn dimension(&self) -> usize {
        DETERMINISTIC_DIMENSION
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::InvalidInput("cannot embed empty text".into()));
        }
        let tokens = tokenize(text);
        let mut v = vec![0.0; DETERMINISTIC_DIMENSION];
        for t in &tokens {
            Self::add_feature(&mut v, t);
        }
        for pair in tokens.windows(2) {
            Self::add_feature(&mut v, &format!("{} {}", pair[0], pair[1]));
        }
        normalize(&mut v).map_err(|_| {
            EmbedError::InvalidInput(format!("text {text:?} hashes to a zero vector"))
        })?;
        Ok(v)
    }
}

/// Exact-text cache in front of another embedder.
///
/// Concurrent readers and writers are allowed; identical keys resolve
/// last-writer-wins. The map can be persisted to and restored from a JSON
/// sidecar file.
pub struct CachedEmbedder<E> {
    inner: E,
    cache: RwLock<HashMap<String, Vec<f64>>>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Wraps `inner`, pre-loading entries from `path` when the file exists.
    pub fn with_sidecar(inner: E, path: &Path) -> Result<Self, Error> {
        let me = Self::new(inner);
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let entries: HashMap<String, Vec<f64>> = serde_json::from_str(&text)?;
            *me.cache.write().expect("cache lock") = entries;
        }
        Ok(me)
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the cache as JSON with sorted keys, via temp file and rename.
    pub fn persist(&self, path: &Path) -> Result<(), Error> {
        let sorted: std::collections::BTreeMap<String, Vec<f64>> = self
            .cache
            .read()
            .expect("cache lock")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let text = serde_json::to_string(&sorted)?;
        crate::io::write_atomic(path, text.as_bytes())
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        if let Some(v) = self.cache.read().expect("cache lock").get(text) {
            return Ok(v.clone());
        }
        let v = self.inner.embed(text)?;
        self.cache
            .write()
            .expect("cache lock")
            .insert(text.to_owned(), v.clone());
        Ok(v)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let missing: Vec<String> = {
            let cache = self.cache.read().expect("cache lock");
            let mut seen = std::collections::HashSet::new();
            texts
                .iter()
                .filter(|t| !cache.contains_key(*t) && seen.insert(t.as_str()))
                .cloned()
                .collect()
        };
        if !missing.is_empty() {
            let fresh = self.inner.embed_batch(&missing)?;
            let mut cache = self.cache.write().expect("cache lock");
            for (t, v) in missing.into_iter().zip(fresh) {
                cache.insert(t, v);
            }
        }
        let cache = self.cache.read().expect("cache lock");
        Ok(texts.iter().map(|t| cache[t].clone()).collect())
    }
}
