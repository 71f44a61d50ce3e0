//! Best-response oracle: read the opponent, draft candidates in three
//! modes, keep the one with the highest expected utility.

use accord_core::embedding::Embedder;
use accord_core::transcript::CandidateMode;
use accord_core::types::{CultureId, Gid, Guideline, GuidelineDraft, GuidelineEmbedding, Side, WeightDistribution};
use accord_core::utility::{MetaGame, UtilityTerms};
use accord_core::verbalizer::Verbalizer;
use serde::{Deserialize, Serialize};

use crate::chat::{ChatProvider, ChatRequest, ScriptKey};
use crate::error::{AgentError, Result};
use crate::prompts::PromptSet;

pub const BLOCK_START: &str = "<<<CANDIDATE>>>";
pub const BLOCK_END: &str = "<<<END>>>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub adversarial: u32,
    pub complementary: u32,
    pub innovative: u32,
}

impl Default for ModeCounts {
    fn default() -> Self {
        Self {
            adversarial: 2,
            complementary: 2,
            innovative: 2,
        }
    }
}

impl ModeCounts {
    pub fn get(&self, mode: CandidateMode) -> u32 {
        match mode {
            CandidateMode::Adversarial => self.adversarial,
            CandidateMode::Complementary => self.complementary,
            CandidateMode::Innovative => self.innovative,
        }
    }

    pub fn total(&self) -> u32 {
        self.adversarial + self.complementary + self.innovative
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    #[serde(default)]
    pub counts: ModeCounts,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

fn default_temperature() -> f64 {
    0.7
}

fn default_max_tokens() -> u32 {
    1024
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            counts: ModeCounts::default(),
            temperature: default_temperature(),
            max_tokens: default_max_tokens(),
        }
    }
}

/// What one culture sees when building its response.
#[derive(Debug, Clone, Copy)]
pub struct OracleView<'a> {
    pub topic: &'a str,
    pub culture: &'a CultureId,
    pub opponent: &'a CultureId,
    /// System prompt of this culture's agent.
    pub system_prompt: &'a str,
    pub round: u32,
    pub own_guidelines: &'a [Guideline],
    pub opponent_guidelines: &'a [Guideline],
    pub opponent_weights: &'a WeightDistribution<f64>,
    pub opponent_prev_weights: Option<&'a WeightDistribution<f64>>,
}

fn numbered(gs: &[Guideline], with_reason: bool) -> String {
    gs.iter()
        .enumerate()
        .map(|(i, g)| {
            if with_reason {
                format!("{}. {} Reason: {}", i + 1, g.content.trim(), g.reason.trim())
            } else {
                format!("{}. {}", i + 1, g.content.trim())
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// The analysis request; it embeds the verbalized opponent position.
pub fn analysis_request(
    prompts: &PromptSet,
    verbalizer: &Verbalizer,
    view: &OracleView<'_>,
    cfg: &OracleConfig,
) -> Result<ChatRequest> {
    if view.opponent_guidelines.is_empty() {
        return Err(AgentError::Core(accord_core::error::Error::InvalidInput(
            "opponent has no guidelines to analyse".into(),
        )));
    }
    let speech = verbalizer.render(view.opponent_guidelines, view.opponent_weights, view.opponent_prev_weights)?;
    let user = PromptSet::render(
        &prompts.analysis,
        &[
            ("opponent", &view.opponent.display_name),
            ("speech", &speech),
            ("guidelines", &numbered(view.opponent_guidelines, true)),
        ],
    )?;
    let mut req = ChatRequest::new(ScriptKey::new(&view.culture.id, view.round, "analysis"), view.system_prompt, user)
        .with_temperature(cfg.temperature);
    req.max_tokens = cfg.max_tokens;
    Ok(req)
}

pub fn analyze_opponent(
    chat: &dyn ChatProvider,
    prompts: &PromptSet,
    verbalizer: &Verbalizer,
    view: &OracleView<'_>,
    cfg: &OracleConfig,
) -> Result<String> {
    let req = analysis_request(prompts, verbalizer, view, cfg)?;
    Ok(chat.complete(&req)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateBatch {
    pub candidates: Vec<(CandidateMode, GuidelineDraft)>,
    pub warnings: Vec<String>,
}

impl CandidateBatch {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Splits a response into sentinel-delimited blocks holding exactly one
/// `CONTENT:`, `REASON:` and `DESCRIPTION:` line each, in that order.
/// Malformed blocks are skipped and reported.
pub fn parse_candidates(text: &str) -> (Vec<GuidelineDraft>, Vec<String>) {
    const LABELS: [&str; 3] = ["CONTENT:", "REASON:", "DESCRIPTION:"];
    let mut drafts = Vec::new();
    let mut warnings = Vec::new();
    let mut block: Option<(usize, Vec<&str>)> = None;
    let mut blocks = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line == BLOCK_START {
            if let Some((start, _)) = block.take() {
                warnings.push(format!("block at line {} is not closed", start + 1));
            }
            block = Some((n, Vec::new()));
            continue;
        }
        if line == BLOCK_END {
            let Some((start, lines)) = block.take() else {
                warnings.push(format!("stray end marker at line {}", n + 1));
                continue;
            };
            blocks += 1;
            let fields: Option<Vec<&str>> = (lines.len() == 3)
                .then(|| {
                    lines
                        .iter()
                        .zip(LABELS)
                        .map(|(l, label)| l.strip_prefix(label).map(str::trim))
                        .collect()
                })
                .flatten();
            match fields.map(|f| GuidelineDraft::new(f[0], f[1], f[2])) {
                Some(Ok(d)) => drafts.push(d),
                Some(Err(e)) => warnings.push(format!("block at line {}: {e}", start + 1)),
                None => warnings.push(format!(
                    "block at line {} does not hold exactly CONTENT, REASON and DESCRIPTION lines",
                    start + 1
                )),
            }
            continue;
        }
        if let Some((_, lines)) = block.as_mut() {
            if !line.is_empty() {
                lines.push(line);
            }
        }
    }
    if let Some((start, _)) = block {
        warnings.push(format!("block at line {} is not closed", start + 1));
    }
    if blocks == 0 && warnings.is_empty() {
        warnings.push("no candidate blocks found".into());
    }
    (drafts, warnings)
}

pub fn candidate_request(
    prompts: &PromptSet,
    view: &OracleView<'_>,
    analysis: &str,
    mode: CandidateMode,
    count: u32,
    cfg: &OracleConfig,
) -> Result<ChatRequest> {
    let user = PromptSet::render(
        &prompts.candidates,
        &[
            ("analysis", analysis.trim()),
            ("own", &numbered(view.own_guidelines, false)),
            ("instruction", prompts.modes.get(mode)),
            ("count", &count.to_string()),
            ("format", &prompts.candidate_format),
        ],
    )?;
    let stage = format!("candidates:{}", mode.as_str());
    let mut req = ChatRequest::new(ScriptKey::new(&view.culture.id, view.round, stage), view.system_prompt, user)
        .with_temperature(cfg.temperature);
    req.max_tokens = cfg.max_tokens;
    Ok(req)
}

/// One request per mode with a non-zero count. Extra candidates beyond the
/// requested count are dropped with a warning.
pub fn generate_candidates(
    chat: &dyn ChatProvider,
    prompts: &PromptSet,
    view: &OracleView<'_>,
    analysis: &str,
    cfg: &OracleConfig,
) -> Result<CandidateBatch> {
    if analysis.trim().is_empty() {
        return Err(AgentError::Oracle {
            culture: view.culture.id.clone(),
            message: "opponent analysis is empty".into(),
        });
    }
    let mut batch = CandidateBatch {
        candidates: Vec::new(),
        warnings: Vec::new(),
    };
    for mode in CandidateMode::ALL {
        let count = cfg.counts.get(mode);
        if count == 0 {
            continue;
        }
        let req = candidate_request(prompts, view, analysis, mode, count, cfg)?;
        let text = chat.complete(&req)?;
        let (mut drafts, warnings) = parse_candidates(&text);
        batch
            .warnings
            .extend(warnings.into_iter().map(|w| format!("{}: {w}", mode.as_str())));
        if drafts.len() > count as usize {
            batch.warnings.push(format!(
                "{}: kept the first {count} of {} candidates",
                mode.as_str(),
                drafts.len()
            ));
            drafts.truncate(count as usize);
        }
        batch.candidates.extend(drafts.into_iter().map(|d| (mode, d)));
    }
    for w in &batch.warnings {
        log::warn!("{} round {}: {w}", view.culture.id, view.round);
    }
    if batch.is_empty() {
        return Err(AgentError::Oracle {
            culture: view.culture.id.clone(),
            message: format!("no usable candidates ({})", batch.warnings.join("; ")),
        });
    }
    Ok(batch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    /// Position of the winner in the batch.
    pub index: usize,
    pub mode: CandidateMode,
    pub draft: GuidelineDraft,
    pub embedding: Vec<f64>,
    pub terms: UtilityTerms<f64>,
    /// Terms of every batch member, in batch order.
    pub batch_terms: Vec<UtilityTerms<f64>>,
    pub incumbent_utility: f64,
    pub delta_u: f64,
}

impl BestResponse {
    pub fn expected_utility(&self) -> f64 {
        self.terms.total
    }
}

/// Scores every candidate against the opponent's weights and returns the
/// maximiser, earliest on ties. `delta_u` is measured against the best of
/// the culture's admitted guidelines.
pub fn select_best_response(
    batch: &CandidateBatch,
    game: &MetaGame<f64>,
    side: Side,
    opponent_weights: &WeightDistribution<f64>,
    embedder: &dyn Embedder,
) -> Result<BestResponse> {
    if batch.is_empty() {
        return Err(AgentError::Core(accord_core::error::Error::InvalidInput(
            "candidate batch is empty".into(),
        )));
    }
    let texts: Vec<String> = batch.candidates.iter().map(|(_, d)| d.embedding_text()).collect();
    let vectors = embedder.embed_batch(&texts)?;
    let probe = Gid::new("candidate", 0);
    let mut batch_terms = Vec::with_capacity(texts.len());
    for (v, text) in vectors.iter().zip(&texts) {
        let e = GuidelineEmbedding::new(probe.clone(), v.clone(), text.as_str())?;
        batch_terms.push(game.candidate_terms(side, &e, opponent_weights)?);
    }
    let mut best = 0;
    for (i, t) in batch_terms.iter().enumerate() {
        if t.total > batch_terms[best].total {
            best = i;
        }
    }
    let incumbent_utility = game
        .expected_utilities(side, opponent_weights)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    let terms = batch_terms[best];
    let (mode, draft) = batch.candidates[best].clone();
    Ok(BestResponse {
        index: best,
        mode,
        draft,
        embedding: vectors[best].clone(),
        terms,
        batch_terms,
        incumbent_utility,
        delta_u: terms.total - incumbent_utility,
    })
}
