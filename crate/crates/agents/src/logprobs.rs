//! Token log-probability scoring for the perplexity metrics.

use std::collections::{BTreeMap, BTreeSet};

use accord_core::metrics::TokenLogProbs;

use crate::chat::RemoteChat;
use crate::error::ProviderError;

pub trait LogProbProvider: Send + Sync {
    /// Log-probabilities of each token of `continuation` given `context`.
    fn score_logprobs(&self, context: &str, continuation: &str) -> Result<TokenLogProbs, ProviderError>;
}

impl LogProbProvider for RemoteChat {
    fn score_logprobs(&self, context: &str, continuation: &str) -> Result<TokenLogProbs, ProviderError> {
        if continuation.is_empty() {
            return Err(ProviderError::InvalidInput("continuation is empty".into()));
        }
        self.score(context, continuation)
    }
}

const BOS: char = '\u{2}';
const UNK: char = '\u{0}';

/// Character bigram model with add-one smoothing, one token per character.
///
/// `P(c | p) = (n(p, c) + 1) / (n(p) + V)` where `V` counts the corpus
/// characters plus one unknown symbol. The first continuation character is
/// conditioned on the last context character, or on a start symbol when the
/// context is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramModel {
    vocab: BTreeSet<char>,
    pairs: BTreeMap<(char, char), u64>,
    totals: BTreeMap<char, u64>,
}

impl BigramModel {
    pub fn fit(corpus: &str) -> Result<Self, ProviderError> {
        if corpus.is_empty() {
            return Err(ProviderError::InvalidInput("bigram corpus is empty".into()));
        }
        let mut m = Self {
            vocab: corpus.chars().collect(),
            pairs: BTreeMap::new(),
            totals: BTreeMap::new(),
        };
        let mut prev = BOS;
        for c in corpus.chars() {
            *m.pairs.entry((prev, c)).or_default() += 1;
            *m.totals.entry(prev).or_default() += 1;
            prev = c;
        }
        Ok(m)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len() + 1
    }

    fn symbol(&self, c: char) -> char {
        if self.vocab.contains(&c) {
            c
        } else {
            UNK
        }
    }

    pub fn logprob(&self, prev: Option<char>, c: char) -> f64 {
        let p = prev.map_or(BOS, |p| self.symbol(p));
        let c = self.symbol(c);
        let n = self.pairs.get(&(p, c)).copied().unwrap_or(0) as f64;
        let total = self.totals.get(&p).copied().unwrap_or(0) as f64;
        ((n + 1.0) / (total + self.vocab_size() as f64)).ln()
    }
}

impl LogProbProvider for BigramModel {
    fn score_logprobs(&self, context: &str, continuation: &str) -> Result<TokenLogProbs, ProviderError> {
        if continuation.is_empty() {
            return Err(ProviderError::InvalidInput("continuation is empty".into()));
        }
        let mut prev = context.chars().last();
        let mut tokens = Vec::new();
        let mut logprobs = Vec::new();
        for c in continuation.chars() {
            logprobs.push(self.logprob(prev, c));
            tokens.push(c.to_string());
            prev = Some(c);
        }
        TokenLogProbs::new(tokens, logprobs).map_err(|e| ProviderError::MalformedResponse(e.to_string()))
    }
}
