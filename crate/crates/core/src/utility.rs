//! The three-term guideline utility and the meta-game payoff matrices.
//!
//! A guideline's utility is `α·Consistency + β·Acceptance + γ·Novelty` where
//! Consistency is similarity to the culture's initial anchor, Acceptance is
//! expected similarity to the opponent's guidelines under the opponent's
//! weights, and Novelty is one minus the highest similarity to the culture's
//! earlier guidelines (one when there are none).
//!
//! Matrix entry `payoff_a[j][k]` folds A's row-only terms into every column
//! and uses the raw pairwise similarity for Acceptance, so that
//! `Σ_k w_b[k]·payoff_a[j][k]` is exactly the utility of guideline `j`.

use serde::{Deserialize, Serialize};

use crate::embedding::cosine_similarity;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{Gid, GuidelineEmbedding, Side, UtilityConfig, UtilityMatrix, WeightDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UtilityTerms<T> {
    pub consistency: T,
    pub acceptance: T,
    pub novelty: T,
    pub total: T,
}

fn combine<T: Scalar>(cfg: &UtilityConfig<T>, consistency: T, acceptance: T, novelty: T) -> T {
    cfg.alpha() * consistency + cfg.beta() * acceptance + cfg.gamma_nov() * novelty
}

pub fn consistency<T: Scalar>(
    candidate: &GuidelineEmbedding<T>,
    initial: &GuidelineEmbedding<T>,
) -> Result<T> {
    cosine_similarity(&candidate.vector, &initial.vector)
}

/// Expected similarity of `candidate` to the opponent's guidelines under the
/// opponent's mixed strategy.
pub fn acceptance<T: Scalar>(
    candidate: &GuidelineEmbedding<T>,
    opponent_embeddings: &[GuidelineEmbedding<T>],
    opponent_weights: &WeightDistribution<T>,
) -> Result<T> {
    let gids: Vec<Gid> = opponent_embeddings.iter().map(|e| e.gid.clone()).collect();
    if !opponent_weights.indexes(&gids) {
        return Err(Error::invalid(
            "opponent weights do not index the opponent embeddings",
        ));
    }
    let mut total = T::zero();
    for (emb, (_, w)) in opponent_embeddings.iter().zip(opponent_weights.entries()) {
        total = total + *w * cosine_similarity(&candidate.vector, &emb.vector)?;
    }
    Ok(total)
}

/// `1 − max` similarity to the history; `1` for an empty history.
pub fn novelty<T: Scalar>(
    candidate: &GuidelineEmbedding<T>,
    own_history: &[GuidelineEmbedding<T>],
) -> Result<T> {
    let mut best: Option<T> = None;
    for h in own_history {
        let s = cosine_similarity(&candidate.vector, &h.vector)?;
        best = Some(best.map_or(s, |b| b.max(s)));
    }
    Ok(T::one() - best.unwrap_or_else(T::zero))
}

pub fn utility_terms<T: Scalar>(
    candidate: &GuidelineEmbedding<T>,
    initial: &GuidelineEmbedding<T>,
    own_history: &[GuidelineEmbedding<T>],
    opponent_embeddings: &[GuidelineEmbedding<T>],
    opponent_weights: &WeightDistribution<T>,
    cfg: &UtilityConfig<T>,
) -> Result<UtilityTerms<T>> {
    let c = consistency(candidate, initial)?;
    let a = acceptance(candidate, opponent_embeddings, opponent_weights)?;
    let n = novelty(candidate, own_history)?;
    Ok(UtilityTerms {
        consistency: c,
        acceptance: a,
        novelty: n,
        total: combine(cfg, c, a, n),
    })
}

pub fn utility<T: Scalar>(
    candidate: &GuidelineEmbedding<T>,
    initial: &GuidelineEmbedding<T>,
    own_history: &[GuidelineEmbedding<T>],
    opponent_embeddings: &[GuidelineEmbedding<T>],
    opponent_weights: &WeightDistribution<T>,
    cfg: &UtilityConfig<T>,
) -> Result<T> {
    utility_terms(
        candidate,
        initial,
        own_history,
        opponent_embeddings,
        opponent_weights,
        cfg,
    )
    .map(|t| t.total)
}

/// Anchor for Consistency: the normalized centroid of a culture's initial
/// guideline embeddings (the embedding itself when there is only one).
pub fn initial_anchor<T: Scalar>(initial: &[GuidelineEmbedding<T>]) -> Result<GuidelineEmbedding<T>> {
    let first = initial
        .first()
        .ok_or_else(|| Error::invalid("a culture needs at least one initial guideline"))?;
    if initial.len() == 1 {
        return Ok(first.clone());
    }
    let dim = first.dimension();
    let mut centroid = vec![T::zero(); dim];
    for e in initial {
        if e.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.dimension(),
            });
        }
        for (c, &x) in centroid.iter_mut().zip(&e.vector) {
            *c = *c + x;
        }
    }
    crate::embedding::normalize(&mut centroid)
        .map_err(|_| Error::invalid("initial guidelines cancel out; anchor is undefined"))?;
    let text = initial
        .iter()
        .map(|e| e.source_text.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    GuidelineEmbedding::new(first.gid.clone(), centroid, text)
}

/// Ordered guideline embeddings of one culture.
///
/// The first `initial_count` entries form the initial set and have an empty
/// history; every later entry's history is all entries before it.
#[derive(Debug, Clone, Copy)]
pub struct SideInput<'a, T> {
    pub embeddings: &'a [GuidelineEmbedding<T>],
    pub anchor: &'a GuidelineEmbedding<T>,
    pub initial_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct SideProfile<T> {
    embeddings: Vec<GuidelineEmbedding<T>>,
    anchor: GuidelineEmbedding<T>,
    consistency: Vec<T>,
    novelty: Vec<T>,
}

impl<T: Scalar> SideProfile<T> {
    fn from_input(input: SideInput<'_, T>) -> Result<Self> {
        if input.embeddings.is_empty() {
            return Err(Error::invalid("a culture needs at least one guideline"));
        }
        if input.initial_count == 0 || input.initial_count > input.embeddings.len() {
            return Err(Error::invalid(format!(
                "initial count {} out of range for {} guidelines",
                input.initial_count,
                input.embeddings.len()
            )));
        }
        let mut profile = Self {
            embeddings: Vec::with_capacity(input.embeddings.len()),
            anchor: input.anchor.clone(),
            consistency: Vec::new(),
            novelty: Vec::new(),
        };
        for (i, e) in input.embeddings.iter().enumerate() {
            let history_len = if i < input.initial_count { 0 } else { i };
            profile.push(e.clone(), history_len)?;
        }
        Ok(profile)
    }

    fn push(&mut self, e: GuidelineEmbedding<T>, history_len: usize) -> Result<()> {
        if self.embeddings.iter().any(|x| x.gid == e.gid) {
            return Err(Error::invalid(format!("duplicate guideline id {}", e.gid)));
        }
        let c = consistency(&e, &self.anchor)?;
        let n = novelty(&e, &self.embeddings[..history_len])?;
        self.consistency.push(c);
        self.novelty.push(n);
        self.embeddings.push(e);
        Ok(())
    }

    fn gids(&self) -> Vec<Gid> {
        self.embeddings.iter().map(|e| e.gid.clone()).collect()
    }
}

/// Entry of the row player's table: the row guideline `own` against `other`.
fn entry<T: Scalar>(
    cfg: &UtilityConfig<T>,
    side: &SideProfile<T>,
    own: usize,
    other: &GuidelineEmbedding<T>,
) -> Result<T> {
    let sim = cosine_similarity(&side.embeddings[own].vector, &other.vector)?;
    Ok(combine(cfg, side.consistency[own], sim, side.novelty[own]))
}

/// Builds both payoff tables from scratch.
pub fn build_utility_matrix<T: Scalar>(
    cfg: &UtilityConfig<T>,
    side_a: SideInput<'_, T>,
    side_b: SideInput<'_, T>,
) -> Result<UtilityMatrix<T>> {
    MetaGame::from_sides(*cfg, side_a, side_b).map(|g| g.matrix)
}

/// The restricted game: both cultures' guideline embeddings with their cached
/// Consistency/Novelty terms and the payoff matrices over them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MetaGame<T> {
    cfg: UtilityConfig<T>,
    sides: [SideProfile<T>; 2],
    matrix: UtilityMatrix<T>,
}

impl<T: Scalar> MetaGame<T> {
    /// Initial game: every supplied embedding is part of the initial set and
    /// the anchors are the initial centroids.
    pub fn new(
        cfg: UtilityConfig<T>,
        initial_a: &[GuidelineEmbedding<T>],
        initial_b: &[GuidelineEmbedding<T>],
    ) -> Result<Self> {
        let anchor_a = initial_anchor(initial_a)?;
        let anchor_b = initial_anchor(initial_b)?;
        Self::from_sides(
            cfg,
            SideInput {
                embeddings: initial_a,
                anchor: &anchor_a,
                initial_count: initial_a.len(),
            },
            SideInput {
                embeddings: initial_b,
                anchor: &anchor_b,
                initial_count: initial_b.len(),
            },
        )
    }

    pub fn from_sides(
        cfg: UtilityConfig<T>,
        side_a: SideInput<'_, T>,
        side_b: SideInput<'_, T>,
    ) -> Result<Self> {
        let a = SideProfile::from_input(side_a)?;
        let b = SideProfile::from_input(side_b)?;
        let dim = a.anchor.dimension();
        for e in a
            .embeddings
            .iter()
            .chain(&b.embeddings)
            .chain(std::iter::once(&b.anchor))
        {
            if e.dimension() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dimension(),
                });
            }
        }
        let mut payoff_a = Vec::with_capacity(a.embeddings.len());
        let mut payoff_b = Vec::with_capacity(a.embeddings.len());
        for (j, ea) in a.embeddings.iter().enumerate() {
            let mut row_a = Vec::with_capacity(b.embeddings.len());
            let mut row_b = Vec::with_capacity(b.embeddings.len());
            for (k, eb) in b.embeddings.iter().enumerate() {
                row_a.push(entry(&cfg, &a, j, eb)?);
                row_b.push(entry(&cfg, &b, k, ea)?);
            }
            payoff_a.push(row_a);
            payoff_b.push(row_b);
        }
        let matrix = UtilityMatrix::new(a.gids(), b.gids(), payoff_a, payoff_b)?;
        Ok(Self {
            cfg,
            sides: [a, b],
            matrix,
        })
    }

    pub fn config(&self) -> &UtilityConfig<T> {
        &self.cfg
    }

    pub fn matrix(&self) -> &UtilityMatrix<T> {
        &self.matrix
    }

    pub fn embeddings(&self, side: Side) -> &[GuidelineEmbedding<T>] {
        &self.sides[side.index()].embeddings
    }

    pub fn anchor(&self, side: Side) -> &GuidelineEmbedding<T> {
        &self.sides[side.index()].anchor
    }

    pub fn gids(&self, side: Side) -> Vec<Gid> {
        self.sides[side.index()].gids()
    }

    pub fn len(&self, side: Side) -> usize {
        self.sides[side.index()].embeddings.len()
    }

    /// Cached (consistency, novelty) of an admitted guideline.
    pub fn row_terms(&self, side: Side, index: usize) -> (T, T) {
        let s = &self.sides[side.index()];
        (s.consistency[index], s.novelty[index])
    }

    /// Admits a new guideline for `side`. Its history is every guideline the
    /// culture already holds. Only the new row (A) or column (B) is computed.
    pub fn add_guideline(&mut self, side: Side, embedding: GuidelineEmbedding<T>) -> Result<()> {
        let dim = self.sides[0].anchor.dimension();
        if embedding.dimension() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: embedding.dimension(),
            });
        }
        let own = side.index();
        let history_len = self.sides[own].embeddings.len();
        self.sides[own].push(embedding, history_len)?;
        let new = history_len;
        let gid = self.sides[own].embeddings[new].gid.clone();
        let (mine, theirs) = match side {
            Side::A => (&self.sides[0], &self.sides[1]),
            Side::B => (&self.sides[1], &self.sides[0]),
        };
        let new_emb = &mine.embeddings[new];
        let mut own_payoffs = Vec::with_capacity(theirs.embeddings.len());
        let mut their_payoffs = Vec::with_capacity(theirs.embeddings.len());
        for (k, other) in theirs.embeddings.iter().enumerate() {
            own_payoffs.push(entry(&self.cfg, mine, new, other)?);
            their_payoffs.push(entry(&self.cfg, theirs, k, new_emb)?);
        }
        match side {
            Side::A => self.matrix.push_row(gid, own_payoffs, their_payoffs),
            Side::B => self.matrix.push_col(gid, their_payoffs, own_payoffs),
        }
    }

    /// Utility of a not-yet-admitted candidate for `side` against the
    /// opponent's weights; its history is all of the culture's guidelines.
    pub fn candidate_terms(
        &self,
        side: Side,
        candidate: &GuidelineEmbedding<T>,
        opponent_weights: &WeightDistribution<T>,
    ) -> Result<UtilityTerms<T>> {
        let mine = &self.sides[side.index()];
        let theirs = &self.sides[side.other().index()];
        utility_terms(
            candidate,
            &mine.anchor,
            &mine.embeddings,
            &theirs.embeddings,
            opponent_weights,
            &self.cfg,
        )
    }

    /// Expected utility of each admitted guideline of `side` under the
    /// opponent's weights, read off the payoff matrix.
    pub fn expected_utilities(
        &self,
        side: Side,
        opponent_weights: &WeightDistribution<T>,
    ) -> Result<Vec<T>> {
        let opp = self.gids(side.other());
        if !opponent_weights.indexes(&opp) {
            return Err(Error::invalid(
                "opponent weights do not index the opponent guideline set",
            ));
        }
        let w = opponent_weights.values();
        Ok(match side {
            Side::A => self.matrix.row_values(&w),
            Side::B => self.matrix.col_values(&w),
        })
    }
}
