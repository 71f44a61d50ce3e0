//! Domain types of the two-culture negotiation game.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{l2_norm, Scalar};

/// One of the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::A => 0,
            Side::B => 1,
        }
    }

    pub const BOTH: [Side; 2] = [Side::A, Side::B];
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CultureId {
    pub id: String,
    pub display_name: String,
}

impl CultureId {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.trim().is_empty() {
            return Err(Error::invalid("culture id must be non-empty"));
        }
        if id.contains(':') {
            return Err(Error::invalid("culture id must not contain ':'"));
        }
        Ok(Self {
            id,
            display_name: display_name.into(),
        })
    }
}

/// Checks that a culture pair forms a valid two-player game.
pub fn validate_pair(a: &CultureId, b: &CultureId) -> Result<()> {
    if a.id == b.id {
        return Err(Error::invalid(format!(
            "a game needs two distinct cultures, got '{}' twice",
            a.id
        )));
    }
    Ok(())
}

/// Guideline identifier: owning culture plus insertion ordinal.
///
/// Serialized as `"<culture>:<ordinal>"`. Ordering is by culture, then ordinal,
/// which is the tie-break order used by every argmax in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Gid {
    pub culture: String,
    pub ordinal: u32,
}

impl Gid {
    pub fn new(culture: impl Into<String>, ordinal: u32) -> Self {
        Self {
            culture: culture.into(),
            ordinal,
        }
    }
}

impl fmt::Display for Gid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.culture, self.ordinal)
    }
}

impl FromStr for Gid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (culture, ordinal) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::invalid(format!("malformed guideline id '{s}'")))?;
        if culture.is_empty() {
            return Err(Error::invalid(format!("malformed guideline id '{s}'")));
        }
        let ordinal = ordinal
            .parse()
            .map_err(|_| Error::invalid(format!("malformed guideline ordinal in '{s}'")))?;
        Ok(Gid::new(culture, ordinal))
    }
}

impl From<Gid> for String {
    fn from(g: Gid) -> String {
        g.to_string()
    }
}

impl TryFrom<String> for Gid {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// The content/reason/description triple before it is admitted into a game.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineDraft {
    pub content: String,
    pub reason: String,
    pub description: String,
}

impl GuidelineDraft {
    pub fn new(
        content: impl Into<String>,
        reason: impl Into<String>,
        description: impl Into<String>,
    ) -> Result<Self> {
        let draft = Self {
            content: content.into(),
            reason: reason.into(),
            description: description.into(),
        };
        if draft.content.trim().is_empty() {
            return Err(Error::invalid("guideline content must be non-empty"));
        }
        Ok(draft)
    }

    /// Text fed to the embedder: `"content. reason. description."`.
    ///
    /// Trailing periods on each part are collapsed so a part that already ends
    /// in a full stop does not produce `".."`; empty parts are skipped.
    pub fn embedding_text(&self) -> String {
        let parts: Vec<&str> = [&self.content, &self.reason, &self.description]
            .into_iter()
            .map(|p| p.trim().trim_end_matches('.').trim_end())
            .filter(|p| !p.is_empty())
            .collect();
        let mut out = parts.join(". ");
        out.push('.');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guideline {
    pub gid: Gid,
    pub content: String,
    pub reason: String,
    pub description: String,
    pub origin_round: u32,
}

impl Guideline {
    pub fn from_draft(gid: Gid, draft: GuidelineDraft, origin_round: u32) -> Result<Self> {
        if draft.content.trim().is_empty() {
            return Err(Error::invalid("guideline content must be non-empty"));
        }
        Ok(Self {
            gid,
            content: draft.content,
            reason: draft.reason,
            description: draft.description,
            origin_round,
        })
    }

    pub fn draft(&self) -> GuidelineDraft {
        GuidelineDraft {
            content: self.content.clone(),
            reason: self.reason.clone(),
            description: self.description.clone(),
        }
    }

    pub fn embedding_text(&self) -> String {
        self.draft().embedding_text()
    }
}

/// Mixed strategy over one culture's guidelines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct WeightDistribution<T> {
    entries: Vec<(Gid, T)>,
}

impl<T: Scalar> WeightDistribution<T> {
    pub fn new(entries: Vec<(Gid, T)>) -> Result<Self> {
        let dist = Self { entries };
        dist.validate()?;
        Ok(dist)
    }

    pub fn from_parts(gids: &[Gid], weights: &[T]) -> Result<Self> {
        if gids.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: gids.len(),
                found: weights.len(),
            });
        }
        Self::new(gids.iter().cloned().zip(weights.iter().copied()).collect())
    }

    pub fn uniform(gids: &[Gid]) -> Result<Self> {
        if gids.is_empty() {
            return Err(Error::invalid("uniform distribution over an empty set"));
        }
        let w = T::one() / T::from_usize_lossy(gids.len());
        Self::from_parts(gids, &vec![w; gids.len()])
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid("weight distribution must be non-empty"));
        }
        let culture = &self.entries[0].0.culture;
        let mut seen = HashSet::with_capacity(self.entries.len());
        let mut sum = T::zero();
        for (gid, w) in &self.entries {
            if !w.is_finite() || *w < T::zero() {
                return Err(Error::invalid(format!("weight for {gid} is {w}")));
            }
            if &gid.culture != culture {
                return Err(Error::invalid(format!(
                    "weights mix cultures '{culture}' and '{}'",
                    gid.culture
                )));
            }
            if !seen.insert(gid) {
                return Err(Error::invalid(format!("duplicate guideline id {gid}")));
            }
            sum = sum + *w;
        }
        if (sum.as_f64() - 1.0).abs() > T::SIMPLEX_TOL {
            return Err(Error::invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(Gid, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gids(&self) -> Vec<Gid> {
        self.entries.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn values(&self) -> Vec<T> {
        self.entries.iter().map(|(_, w)| *w).collect()
    }

    pub fn get(&self, gid: &Gid) -> Option<T> {
        self.entries.iter().find(|(g, _)| g == gid).map(|(_, w)| *w)
    }

    /// True when the ids match `gids` exactly and in order.
    pub fn indexes(&self, gids: &[Gid]) -> bool {
        self.entries.len() == gids.len() && self.entries.iter().zip(gids).all(|((g, _), h)| g == h)
    }
}

/// Weights of the Consistency, Acceptance and Novelty terms plus the
/// admission threshold for new guidelines.
///
/// The three term weights are normalized to sum to one on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", try_from = "RawUtilityConfig<T>")]
pub struct UtilityConfig<T> {
    alpha: T,
    beta: T,
    gamma_nov: T,
    epsilon: T,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct RawUtilityConfig<T> {
    alpha: T,
    beta: T,
    gamma_nov: T,
    #[serde(default)]
    epsilon: T,
}

impl<T: Scalar> TryFrom<RawUtilityConfig<T>> for UtilityConfig<T> {
    type Error = Error;

    fn try_from(r: RawUtilityConfig<T>) -> Result<Self> {
        UtilityConfig::new(r.alpha, r.beta, r.gamma_nov, r.epsilon)
    }
}

impl<T: Scalar> UtilityConfig<T> {
    pub fn new(alpha: T, beta: T, gamma_nov: T, epsilon: T) -> Result<Self> {
        let all = [alpha, beta, gamma_nov, epsilon];
        if all.iter().any(|x| !x.is_finite() || *x < T::zero()) {
            return Err(Error::invalid(
                "utility weights and epsilon must be finite and non-negative",
            ));
        }
        let total = alpha + beta + gamma_nov;
        if total <= T::zero() {
            return Err(Error::invalid("utility weights must not all be zero"));
        }
        Ok(Self {
            alpha: alpha / total,
            beta: beta / total,
            gamma_nov: gamma_nov / total,
            epsilon,
        })
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn gamma_nov(&self) -> T {
        self.gamma_nov
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < T::zero() {
            return Err(Error::invalid("epsilon must be finite and non-negative"));
        }
        self.epsilon = epsilon;
        Ok(self)
    }
}

impl<T: Scalar> Default for UtilityConfig<T> {
    /// 5:5:2 weighting with a zero admission threshold.
    fn default() -> Self {
        Self::new(T::lit(5.0), T::lit(5.0), T::lit(2.0), T::zero()).expect("valid defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GuidelineEmbedding<T> {
    pub gid: Gid,
    pub vector: Vec<T>,
    pub source_text: String,
}

impl<T: Scalar> GuidelineEmbedding<T> {
    pub fn new(gid: Gid, vector: Vec<T>, source_text: impl Into<String>) -> Result<Self> {
        if vector.is_empty() {
            return Err(Error::invalid("embedding vector is empty"));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("embedding vector has non-finite entries"));
        }
        let norm = l2_norm(&vector).as_f64();
        if (norm - 1.0).abs() > T::SIMPLEX_TOL.max(1e-6) {
            return Err(Error::invalid(format!(
                "embedding for {gid} has norm {norm}, expected 1"
            )));
        }
        Ok(Self {
            gid,
            vector,
            source_text: source_text.into(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.vector.len()
    }
}

/// Per-player payoff tables over joint guideline indices.
///
/// Row `j` is culture A's guideline `rows[j]`, column `k` is culture B's
/// guideline `cols[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct UtilityMatrix<T> {
    rows: Vec<Gid>,
    cols: Vec<Gid>,
    payoff_a: Vec<Vec<T>>,
    payoff_b: Vec<Vec<T>>,
}

impl<T: Scalar> UtilityMatrix<T> {
    pub fn new(
        rows: Vec<Gid>,
        cols: Vec<Gid>,
        payoff_a: Vec<Vec<T>>,
        payoff_b: Vec<Vec<T>>,
    ) -> Result<Self> {
        let m = Self {
            rows,
            cols,
            payoff_a,
            payoff_b,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix with synthetic ids `a:0..` and `b:0..`.
    pub fn from_payoffs(payoff_a: Vec<Vec<T>>, payoff_b: Vec<Vec<T>>) -> Result<Self> {
        let n_rows = payoff_a.len();
        let n_cols = payoff_a.first().map_or(0, Vec::len);
        let rows = (0..n_rows as u32).map(|i| Gid::new("a", i)).collect();
        let cols = (0..n_cols as u32).map(|i| Gid::new("b", i)).collect();
        Self::new(rows, cols, payoff_a, payoff_b)
    }

    pub fn empty() -> Self {
        Self {
            rows: Vec::new(),
            cols: Vec::new(),
            payoff_a: Vec::new(),
            payoff_b: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r, c) = self.shape();
        for (name, table) in [("payoff_a", &self.payoff_a), ("payoff_b", &self.payoff_b)] {
            if table.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: table.len(),
                });
            }
            for row in table {
                if row.len() != c {
                    return Err(Error::DimensionMismatch {
                        expected: c,
                        found: row.len(),
                    });
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid(format!("{name} has non-finite entries")));
                }
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.cols.is_empty()
    }

    pub fn rows(&self) -> &[Gid] {
        &self.rows
    }

    pub fn cols(&self) -> &[Gid] {
        &self.cols
    }

    pub fn payoff_a(&self) -> &[Vec<T>] {
        &self.payoff_a
    }

    pub fn payoff_b(&self) -> &[Vec<T>] {
        &self.payoff_b
    }

    pub fn a(&self, j: usize, k: usize) -> T {
        self.payoff_a[j][k]
    }

    pub fn b(&self, j: usize, k: usize) -> T {
        self.payoff_b[j][k]
    }

    /// `payoff_a · w_b`: A's payoff for each pure row against `w_b`.
    pub fn row_values(&self, w_b: &[T]) -> Vec<T> {
        self.payoff_a
            .iter()
            .map(|row| row.iter().zip(w_b).fold(T::zero(), |s, (&x, &w)| s + x * w))
            .collect()
    }

    /// `payoff_bᵀ · w_a`: B's payoff for each pure column against `w_a`.
    pub fn col_values(&self, w_a: &[T]) -> Vec<T> {
        let (_, c) = self.shape();
        (0..c)
            .map(|k| {
                self.payoff_b
                    .iter()
                    .zip(w_a)
                    .fold(T::zero(), |s, (row, &w)| s + row[k] * w)
            })
            .collect()
    }

    /// Expected payoffs `(w_aᵀ A w_b, w_aᵀ B w_b)`.
    pub fn expected(&self, w_a: &[T], w_b: &[T]) -> (T, T) {
        let ua = self
            .row_values(w_b)
            .iter()
            .zip(w_a)
            .fold(T::zero(), |s, (&v, &w)| s + v * w);
        let ub = self
            .col_values(w_a)
            .iter()
            .zip(w_b)
            .fold(T::zero(), |s, (&v, &w)| s + v * w);
        (ua, ub)
    }

    /// Appends a row for a new culture-A guideline. Existing entries are untouched.
    pub fn push_row(&mut self, gid: Gid, a_row: Vec<T>, b_row: Vec<T>) -> Result<()> {
        let c = self.cols.len();
        if a_row.len() != c || b_row.len() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: a_row.len().max(b_row.len()),
            });
        }
        self.rows.push(gid);
        self.payoff_a.push(a_row);
        self.payoff_b.push(b_row);
        Ok(())
    }

    /// Appends a column for a new culture-B guideline. Existing entries are untouched.
    pub fn push_col(&mut self, gid: Gid, a_col: Vec<T>, b_col: Vec<T>) -> Result<()> {
        let r = self.rows.len();
        if a_col.len() != r || b_col.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: a_col.len().max(b_col.len()),
            });
        }
        self.cols.push(gid);
        for (row, x) in self.payoff_a.iter_mut().zip(a_col) {
            row.push(x);
        }
        for (row, x) in self.payoff_b.iter_mut().zip(b_col) {
            row.push(x);
        }
        Ok(())
    }
}
