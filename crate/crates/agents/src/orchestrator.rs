//! The negotiation state machine: initialization, atomic rounds and
//! termination.

use accord_core::embedding::Embedder;
use accord_core::solver::{smooth_weights, solve_equilibrium, SolverConfig};
use accord_core::transcript::{
    CandidateRecord, CultureRound, GameStatus, NegotiationTranscript, Outcome, PerCulture, ProposalRecord,
    RoundRecord, SolverRecord, TopicRef, TranscriptSettings,
};
use accord_core::types::{
    validate_pair, CultureId, Gid, Guideline, GuidelineDraft, GuidelineEmbedding, Side, UtilityConfig,
    WeightDistribution,
};
use accord_core::utility::MetaGame;
use accord_core::verbalizer::Verbalizer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chat::{ChatProvider, ChatRequest, ScriptKey};
use crate::error::{AgentError, Result};
use crate::oracle::{
    analyze_opponent, generate_candidates, parse_candidates, select_best_response, BestResponse, OracleConfig,
    OracleView,
};
use crate::prompts::{CultureProfile, PromptSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub utility: UtilityConfig<f64>,
    pub solver: SolverConfig<f64>,
    pub max_rounds: u32,
    /// Initial guidelines elicited per culture when none are supplied.
    pub initial_guidelines: usize,
    pub oracle: OracleConfig,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            utility: UtilityConfig::default(),
            solver: SolverConfig::default(),
            max_rounds: 8,
            initial_guidelines: 1,
            oracle: OracleConfig::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(AgentError::Config("max_rounds must be at least 1".into()));
        }
        if self.initial_guidelines == 0 {
            return Err(AgentError::Config("initial guideline count must be at least 1".into()));
        }
        if self.oracle.counts.total() == 0 {
            return Err(AgentError::Config("at least one candidate mode needs a positive count".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub topic: TopicRef,
    pub cultures: PerCulture<CultureId>,
    pub system_prompts: PerCulture<String>,
    pub guidelines: PerCulture<Vec<Guideline>>,
    pub game: MetaGame<f64>,
    /// Current weights over the current guideline sets; guidelines admitted
    /// in the last round hold weight zero until the next solve.
    pub weights: PerCulture<WeightDistribution<f64>>,
    /// Weights the cultures last spoke about, the baseline for change labels.
    pub spoken: PerCulture<WeightDistribution<f64>>,
    /// Completed rounds.
    pub round: u32,
    pub status: GameStatus,
}

impl GameState {
    /// SHA-256 over the canonical JSON form.
    pub fn state_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("game state serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn check(&self) -> Result<()> {
        for side in Side::BOTH {
            let gids: Vec<Gid> = self.guidelines.get(side).iter().map(|g| g.gid.clone()).collect();
            if !self.weights.get(side).indexes(&gids) || self.game.gids(side) != gids {
                return Err(AgentError::Core(accord_core::error::Error::InvalidInput(format!(
                    "state for culture {} is out of sync",
                    self.cultures.get(side).id
                ))));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Negotiation {
    pub state: GameState,
    pub transcript: NegotiationTranscript,
}

/// Runs negotiations against a chat provider and an embedder.
pub struct Negotiator<'a> {
    pub cfg: GameConfig,
    chat: &'a dyn ChatProvider,
    embedder: &'a dyn Embedder,
    prompts: PromptSet,
    verbalizer: Verbalizer,
}

fn extend_with_zeros(w: &WeightDistribution<f64>, gids: &[Gid]) -> Result<WeightDistribution<f64>> {
    let entries = gids.iter().map(|g| (g.clone(), w.get(g).unwrap_or(0.0))).collect();
    Ok(WeightDistribution::new(entries)?)
}

fn distribution(gids: Vec<Gid>, w: &WeightDistribution<f64>) -> Result<WeightDistribution<f64>> {
    Ok(WeightDistribution::from_parts(&gids, &w.values())?)
}

impl<'a> Negotiator<'a> {
    pub fn new(cfg: GameConfig, chat: &'a dyn ChatProvider, embedder: &'a dyn Embedder) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            chat,
            embedder,
            prompts: PromptSet::bundled(),
            verbalizer: Verbalizer::default(),
        })
    }

    pub fn prompts(&self) -> &PromptSet {
        &self.prompts
    }

    fn embed(&self, g: &Guideline) -> Result<GuidelineEmbedding<f64>> {
        let text = g.embedding_text();
        let v = self.embedder.embed(&text)?;
        Ok(GuidelineEmbedding::new(g.gid.clone(), v, text)?)
    }

    fn ask(&self, key: ScriptKey, system: &str, user: String, temperature: f64) -> Result<String> {
        let mut req = ChatRequest::new(key, system, user).with_temperature(temperature);
        req.max_tokens = self.cfg.oracle.max_tokens;
        Ok(self.chat.complete(&req)?)
    }

    /// Builds the initial game. Guidelines are elicited with one chat call
    /// per culture when `initial` is `None`. Each culture also gives an
    /// initial free-text answer to the topic question.
    pub fn initialize_game(
        &self,
        topic: TopicRef,
        profiles: PerCulture<CultureProfile>,
        initial: Option<PerCulture<Vec<GuidelineDraft>>>,
    ) -> Result<Negotiation> {
        let cultures = PerCulture::new(profiles.a.culture_id()?, profiles.b.culture_id()?);
        validate_pair(&cultures.a, &cultures.b)?;
        let system_prompts = Side::BOTH.map(|side| {
            let (me, them) = (profiles.get(side), profiles.get(side.other()));
            PromptSet::render(
                &self.prompts.system,
                &[
                    ("culture", &me.display_name),
                    ("opponent", &them.display_name),
                    ("topic", &topic.question),
                    ("profile", &me.profile),
                ],
            )
        });
        let [sa, sb] = system_prompts;
        let system_prompts = PerCulture::new(sa?, sb?);

        let drafts = match initial {
            Some(d) => d,
            None => {
                let mut out = PerCulture::<Vec<GuidelineDraft>>::default();
                for side in Side::BOTH {
                    let user = PromptSet::render(
                        &self.prompts.elicit,
                        &[
                            ("count", &self.cfg.initial_guidelines.to_string()),
                            ("topic", &topic.question),
                            ("format", &self.prompts.candidate_format),
                        ],
                    )?;
                    let text = self.ask(
                        ScriptKey::new(&cultures.get(side).id, 0, "elicit"),
                        system_prompts.get(side),
                        user,
                        self.cfg.oracle.temperature,
                    )?;
                    let (mut d, warnings) = parse_candidates(&text);
                    for w in warnings {
                        log::warn!("{} elicitation: {w}", cultures.get(side).id);
                    }
                    d.truncate(self.cfg.initial_guidelines);
                    *out.get_mut(side) = d;
                }
                out
            }
        };

        let mut guidelines = PerCulture::<Vec<Guideline>>::default();
        let mut embeddings = PerCulture::<Vec<GuidelineEmbedding<f64>>>::default();
        for side in Side::BOTH {
            let list = drafts.get(side);
            if list.is_empty() {
                return Err(AgentError::Oracle {
                    culture: cultures.get(side).id.clone(),
                    message: "no initial guidelines".into(),
                });
            }
            for (i, d) in list.iter().enumerate() {
                let g = Guideline::from_draft(Gid::new(&cultures.get(side).id, i as u32), d.clone(), 0)?;
                embeddings.get_mut(side).push(self.embed(&g)?);
                guidelines.get_mut(side).push(g);
            }
        }
        let game = MetaGame::new(self.cfg.utility, &embeddings.a, &embeddings.b)?;
        let weights = PerCulture::new(
            WeightDistribution::uniform(&game.gids(Side::A))?,
            WeightDistribution::uniform(&game.gids(Side::B))?,
        );

        let mut initial_responses = PerCulture::<Option<String>>::default();
        for side in Side::BOTH {
            let user = PromptSet::render(&self.prompts.initial_response, &[("topic", &topic.question)])?;
            let text = self.ask(
                ScriptKey::new(&cultures.get(side).id, 0, "initial_response"),
                system_prompts.get(side),
                user,
                0.0,
            )?;
            *initial_responses.get_mut(side) = Some(text);
        }

        let mut transcript = NegotiationTranscript::new(
            topic.clone(),
            cultures.clone(),
            TranscriptSettings {
                utility: self.cfg.utility,
                solver: self.cfg.solver,
                max_rounds: self.cfg.max_rounds,
            },
            guidelines.clone(),
        );
        transcript.initial_responses = initial_responses;
        let state = GameState {
            topic,
            cultures,
            system_prompts,
            guidelines,
            game,
            spoken: weights.clone(),
            weights,
            round: 0,
            status: GameStatus::Negotiating,
        };
        Ok(Negotiation { state, transcript })
    }

    /// Plays one round. On error `n` is left exactly as it was.
    pub fn run_round(&self, n: &mut Negotiation) -> Result<()> {
        if n.state.status != GameStatus::Negotiating {
            return Err(AgentError::Core(accord_core::error::Error::InvalidInput(format!(
                "cannot play a round in status {:?}",
                n.state.status
            ))));
        }
        let mut work = n.clone();
        self.play(&mut work)?;
        work.state.check()?;
        *n = work;
        Ok(())
    }

    fn respond(
        &self,
        state: &GameState,
        side: Side,
        round: u32,
        interim: &PerCulture<WeightDistribution<f64>>,
    ) -> Result<(String, crate::oracle::CandidateBatch, BestResponse)> {
        let other = side.other();
        let view = OracleView {
            topic: &state.topic.question,
            culture: state.cultures.get(side),
            opponent: state.cultures.get(other),
            system_prompt: state.system_prompts.get(side),
            round,
            own_guidelines: state.guidelines.get(side),
            opponent_guidelines: state.guidelines.get(other),
            opponent_weights: interim.get(other),
            opponent_prev_weights: Some(state.spoken.get(other)),
        };
        let analysis = analyze_opponent(self.chat, &self.prompts, &self.verbalizer, &view, &self.cfg.oracle)?;
        let batch = generate_candidates(self.chat, &self.prompts, &view, &analysis, &self.cfg.oracle)?;
        let best = select_best_response(&batch, &state.game, side, interim.get(other), self.embedder)?;
        Ok((analysis, batch, best))
    }

    fn play(&self, n: &mut Negotiation) -> Result<()> {
        let round = n.state.round + 1;
        let eq = solve_equilibrium(n.state.game.matrix(), &self.cfg.solver)?;
        let raw = PerCulture::new(eq.weights_a, eq.weights_b);
        let interim = PerCulture::new(
            smooth_weights(&raw.a, self.cfg.solver.smoothing_gamma)?,
            smooth_weights(&raw.b, self.cfg.solver.smoothing_gamma)?,
        );
        let solver = SolverRecord {
            status: eq.status,
            exploitability: eq.exploitability,
        };
        if !eq.status.converged() {
            log::warn!("round {round}: solver stopped at {:?}", eq.status);
        }

        let mut speeches = PerCulture::<String>::default();
        for side in Side::BOTH {
            *speeches.get_mut(side) = self.verbalizer.render(
                n.state.guidelines.get(side),
                interim.get(side),
                Some(n.state.spoken.get(side)),
            )?;
        }

        // Both cultures respond to the same game; admissions are applied
        // afterwards, A before B.
        let (analysis_a, batch_a, best_a) = self.respond(&n.state, Side::A, round, &interim)?;
        let (analysis_b, batch_b, best_b) = self.respond(&n.state, Side::B, round, &interim)?;
        let responses = PerCulture::new((analysis_a, batch_a, best_a), (analysis_b, batch_b, best_b));

        let eps = self.cfg.utility.epsilon();
        let mut records = Vec::with_capacity(2);
        for side in Side::BOTH {
            let (analysis, batch, best) = responses.get(side);
            let culture = n.state.cultures.get(side).id.clone();
            let ordinal = n.state.guidelines.get(side).len() as u32;
            let guideline = Guideline::from_draft(Gid::new(&culture, ordinal), best.draft.clone(), round)?;
            let accepted = best.delta_u >= eps;
            let claim_speech = if accepted {
                let text = guideline.embedding_text();
                let emb = GuidelineEmbedding::new(guideline.gid.clone(), best.embedding.clone(), text)?;
                n.state.game.add_guideline(side, emb)?;
                n.state.guidelines.get_mut(side).push(guideline.clone());
                Some(self.verbalizer.render_claim(&guideline)?)
            } else {
                None
            };
            records.push(CultureRound {
                position_speech: speeches.get(side).clone(),
                analysis: analysis.clone(),
                candidates: batch
                    .candidates
                    .iter()
                    .zip(&best.batch_terms)
                    .map(|((mode, draft), terms)| CandidateRecord {
                        mode: *mode,
                        draft: draft.clone(),
                        terms: *terms,
                    })
                    .collect(),
                warnings: batch.warnings.clone(),
                proposal: ProposalRecord {
                    guideline,
                    mode: best.mode,
                    batch_index: best.index,
                    terms: best.terms,
                    incumbent_utility: best.incumbent_utility,
                    delta_u: best.delta_u,
                    accepted,
                },
                claim_speech,
            });
        }
        let rec_b = records.pop().expect("two records");
        let rec_a = records.pop().expect("two records");
        let any_accepted = rec_a.proposal.accepted || rec_b.proposal.accepted;

        for side in Side::BOTH {
            let gids = n.state.game.gids(side);
            *n.state.weights.get_mut(side) = extend_with_zeros(interim.get(side), &gids)?;
        }
        n.state.spoken = interim.clone();
        n.state.round = round;
        n.transcript.rounds.push(RoundRecord {
            round,
            solver,
            raw_weights: raw.clone(),
            interim_weights: interim.clone(),
            cultures: PerCulture::new(rec_a, rec_b),
            guideline_counts: PerCulture::new(n.state.guidelines.a.len(), n.state.guidelines.b.len()),
        });

        if !any_accepted {
            n.state.status = GameStatus::Converged;
            n.transcript.outcome = Some(Outcome {
                status: GameStatus::Converged,
                rounds_played: round,
                solver,
                raw_weights: raw,
                weights: interim,
                position_speeches: speeches,
            });
        } else if round >= self.cfg.max_rounds {
            n.state.status = GameStatus::MaxRoundsReached;
            n.transcript.outcome = Some(self.final_solve(&mut n.state)?);
        }
        Ok(())
    }

    /// Re-solves the grown game once the round budget is spent so the final
    /// weights cover every admitted guideline.
    fn final_solve(&self, state: &mut GameState) -> Result<Outcome> {
        let eq = solve_equilibrium(state.game.matrix(), &self.cfg.solver)?;
        let raw = PerCulture::new(eq.weights_a, eq.weights_b);
        let weights = PerCulture::new(
            smooth_weights(&raw.a, self.cfg.solver.smoothing_gamma)?,
            smooth_weights(&raw.b, self.cfg.solver.smoothing_gamma)?,
        );
        let mut speeches = PerCulture::<String>::default();
        for side in Side::BOTH {
            *speeches.get_mut(side) =
                self.verbalizer
                    .render(state.guidelines.get(side), weights.get(side), Some(state.spoken.get(side)))?;
        }
        state.weights = PerCulture::new(
            distribution(state.game.gids(Side::A), &weights.a)?,
            distribution(state.game.gids(Side::B), &weights.b)?,
        );
        state.spoken = weights.clone();
        Ok(Outcome {
            status: GameStatus::MaxRoundsReached,
            rounds_played: state.round,
            solver: SolverRecord {
                status: eq.status,
                exploitability: eq.exploitability,
            },
            raw_weights: raw,
            weights,
            position_speeches: speeches,
        })
    }

    /// Plays rounds until termination, retrying a failed round once, then
    /// asks both cultures for their final answer at temperature 0.
    pub fn run_to_consensus(&self, mut n: Negotiation) -> Result<Negotiation> {
        while n.state.status == GameStatus::Negotiating {
            if let Err(e) = self.run_round(&mut n) {
                log::warn!("round {} failed, retrying once: {e}", n.state.round + 1);
                self.run_round(&mut n)?;
            }
        }
        let outcome = n
            .transcript
            .outcome
            .clone()
            .ok_or_else(|| AgentError::Config("terminal game without an outcome".into()))?;
        let mut finals = PerCulture::<Option<String>>::default();
        for side in Side::BOTH {
            let user = PromptSet::render(
                &self.prompts.final_response,
                &[
                    ("speech", outcome.position_speeches.get(side)),
                    ("opponent_speech", outcome.position_speeches.get(side.other())),
                    ("topic", &n.state.topic.question),
                ],
            )?;
            let text = self.ask(
                ScriptKey::new(&n.state.cultures.get(side).id, n.state.round, "final_response"),
                n.state.system_prompts.get(side),
                user,
                0.0,
            )?;
            *finals.get_mut(side) = Some(text);
        }
        n.transcript.final_responses = finals;
        n.transcript.validate()?;
        Ok(n)
    }
}
