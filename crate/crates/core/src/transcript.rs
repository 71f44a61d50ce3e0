//! Versioned JSON record of one negotiation.
//!
//! Field names are part of the on-disk format; bump
//! [`TRANSCRIPT_SCHEMA_VERSION`] when changing them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{SolveStatus, SolverConfig};
use crate::types::{CultureId, Guideline, GuidelineDraft, Side, UtilityConfig, WeightDistribution};
use crate::utility::UtilityTerms;

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// One value per culture, serialized as `{"a": .., "b": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerCulture<T> {
    pub a: T,
    pub b: T,
}

impl<T> PerCulture<T> {
    pub fn new(a: T, b: T) -> Self {
        Self { a, b }
    }

    pub fn get(&self, side: Side) -> &T {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn get_mut(&mut self, side: Side) -> &mut T {
        match side {
            Side::A => &mut self.a,
            Side::B => &mut self.b,
        }
    }

    pub fn map<U>(self, mut f: impl FnMut(Side, T) -> U) -> PerCulture<U> {
        PerCulture {
            a: f(Side::A, self.a),
            b: f(Side::B, self.b),
        }
    }

    pub fn as_ref(&self) -> PerCulture<&T> {
        PerCulture {
            a: &self.a,
            b: &self.b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    Initializing,
    Negotiating,
    Converged,
    MaxRoundsReached,
}

impl GameStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, GameStatus::Converged | GameStatus::MaxRoundsReached)
    }
}

/// Generation strategy behind a candidate guideline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateMode {
    Adversarial,
    Complementary,
    Innovative,
}

impl CandidateMode {
    pub const ALL: [CandidateMode; 3] = [
        CandidateMode::Adversarial,
        CandidateMode::Complementary,
        CandidateMode::Innovative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CandidateMode::Adversarial => "adversarial",
            CandidateMode::Complementary => "complementary",
            CandidateMode::Innovative => "innovative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRef {
    pub id: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSettings {
    pub utility: UtilityConfig<f64>,
    pub solver: SolverConfig<f64>,
    pub max_rounds: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverRecord {
    pub status: SolveStatus,
    pub exploitability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub mode: CandidateMode,
    pub draft: GuidelineDraft,
    pub terms: UtilityTerms<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub guideline: Guideline,
    pub mode: CandidateMode,
    /// Position of the winner in the candidate list.
    pub batch_index: usize,
    pub terms: UtilityTerms<f64>,
    /// Best expected utility among the culture's admitted guidelines.
    pub incumbent_utility: f64,
    pub delta_u: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CultureRound {
    pub position_speech: String,
    pub analysis: String,
    pub candidates: Vec<CandidateRecord>,
    pub warnings: Vec<String>,
    pub proposal: ProposalRecord,
    /// Present when the proposal was admitted.
    pub claim_speech: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub solver: SolverRecord,
    /// Solver output before smoothing.
    pub raw_weights: PerCulture<WeightDistribution<f64>>,
    /// Smoothed weights the cultures speak about.
    pub interim_weights: PerCulture<WeightDistribution<f64>>,
    pub cultures: PerCulture<CultureRound>,
    /// Guideline counts once the round's admissions are applied.
    pub guideline_counts: PerCulture<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub status: GameStatus,
    pub rounds_played: u32,
    pub solver: SolverRecord,
    pub raw_weights: PerCulture<WeightDistribution<f64>>,
    pub weights: PerCulture<WeightDistribution<f64>>,
    pub position_speeches: PerCulture<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegotiationTranscript {
    pub schema_version: u32,
    pub topic: TopicRef,
    pub cultures: PerCulture<CultureId>,
    pub settings: TranscriptSettings,
    pub initial_guidelines: PerCulture<Vec<Guideline>>,
    pub initial_responses: PerCulture<Option<String>>,
    pub rounds: Vec<RoundRecord>,
    pub final_responses: PerCulture<Option<String>>,
    pub outcome: Option<Outcome>,
}

impl NegotiationTranscript {
    pub fn new(
        topic: TopicRef,
        cultures: PerCulture<CultureId>,
        settings: TranscriptSettings,
        initial_guidelines: PerCulture<Vec<Guideline>>,
    ) -> Self {
        Self {
            schema_version: TRANSCRIPT_SCHEMA_VERSION,
            topic,
            cultures,
            settings,
            initial_guidelines,
            initial_responses: PerCulture::default(),
            rounds: Vec::new(),
            final_responses: PerCulture::default(),
            outcome: None,
        }
    }

    /// Structural checks: schema version, contiguous round numbers, the
    /// admission rule and weight validity.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != TRANSCRIPT_SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "transcript schema version {} is not supported (expected {})",
                self.schema_version, TRANSCRIPT_SCHEMA_VERSION
            )));
        }
        let eps = self.settings.utility.epsilon();
        for (i, r) in self.rounds.iter().enumerate() {
            if r.round as usize != i + 1 {
                return Err(Error::invalid(format!(
                    "round {} recorded at position {}",
                    r.round,
                    i + 1
                )));
            }
            for side in Side::BOTH {
                let p = &r.cultures.get(side).proposal;
                if p.accepted != (p.delta_u >= eps) {
                    return Err(Error::invalid(format!(
                        "round {}: accepted flag disagrees with delta_u {} and epsilon {eps}",
                        r.round, p.delta_u
                    )));
                }
                r.raw_weights.get(side).validate()?;
                r.interim_weights.get(side).validate()?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }
}
