//! Consensus evaluation: perplexity-based acceptance, value self-consistency,
//! Hofstede VSM13 indices and the fairness projection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::cosine_similarity;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Per-token natural-log probabilities of a continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogProbs {
    pub tokens: Vec<String>,
    pub logprobs: Vec<f64>,
}

impl TokenLogProbs {
    pub fn new(tokens: Vec<String>, logprobs: Vec<f64>) -> Result<Self> {
        if tokens.len() != logprobs.len() {
            return Err(Error::DimensionMismatch {
                expected: tokens.len(),
                found: logprobs.len(),
            });
        }
        if let Some(x) = logprobs.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite log-probability {x}")));
        }
        Ok(Self { tokens, logprobs })
    }

    pub fn len(&self) -> usize {
        self.logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logprobs.is_empty()
    }
}

/// `exp(−mean(logprobs))`.
pub fn perplexity_of(logprobs: &[f64]) -> Result<f64> {
    if logprobs.is_empty() {
        return Err(Error::invalid("perplexity of an empty sequence"));
    }
    if let Some(x) = logprobs.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("non-finite log-probability {x}")));
    }
    let mean = logprobs.iter().sum::<f64>() / logprobs.len() as f64;
    Ok((-mean).exp())
}

pub fn perplexity(lp: &TokenLogProbs) -> Result<f64> {
    perplexity_of(&lp.logprobs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PplStage {
    Initial,
    Consensus,
}

/// Cross perplexities at one stage: each agent scoring the other's response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PplPair {
    pub ppl_i_of_other: f64,
    pub ppl_other_of_i: f64,
    pub stage: PplStage,
}

impl PplPair {
    pub fn new(ppl_i_of_other: f64, ppl_other_of_i: f64, stage: PplStage) -> Result<Self> {
        for p in [ppl_i_of_other, ppl_other_of_i] {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(format!("perplexity must be positive and finite, got {p}")));
            }
        }
        Ok(Self {
            ppl_i_of_other,
            ppl_other_of_i,
            stage,
        })
    }

    pub fn gap(&self) -> f64 {
        (self.ppl_i_of_other - self.ppl_other_of_i).abs()
    }
}

/// Initial gaps below this are degenerate baselines.
pub const DEGENERATE_GAP: f64 = 1e-9;

/// Ratio of the consensus perplexity gap to the initial one.
pub fn ppl_acceptance(initial: &PplPair, consensus: &PplPair) -> Result<f64> {
    if initial.stage != PplStage::Initial || consensus.stage != PplStage::Consensus {
        return Err(Error::invalid(
            "expected an initial-stage pair and a consensus-stage pair",
        ));
    }
    for p in [initial, consensus] {
        PplPair::new(p.ppl_i_of_other, p.ppl_other_of_i, p.stage)?;
    }
    let gap0 = initial.gap();
    if gap0 < DEGENERATE_GAP {
        return Err(Error::DegenerateBaseline {
            gap: gap0,
            floor: DEGENERATE_GAP,
        });
    }
    Ok(consensus.gap() / gap0)
}

fn check_ratios(ratios: &[f64]) -> Result<()> {
    if ratios.is_empty() {
        return Err(Error::invalid("no acceptance ratios to score"));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(Error::invalid(format!("invalid acceptance ratio {r}")));
    }
    Ok(())
}

/// Fraction of ratios strictly below one.
pub fn acceptance_score(ratios: &[f64]) -> Result<f64> {
    check_ratios(ratios)?;
    Ok(ratios.iter().filter(|r| **r < 1.0).count() as f64 / ratios.len() as f64)
}

pub fn mean_ratio(ratios: &[f64]) -> Result<f64> {
    check_ratios(ratios)?;
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Schwartz value dimensions in the order used by every [`ValueVector`].
pub const SCHWARTZ_VALUES: [&str; 10] = [
    "self-direction",
    "stimulation",
    "hedonism",
    "achievement",
    "power",
    "security",
    "conformity",
    "tradition",
    "benevolence",
    "universalism",
];

/// Stance of a response on each Schwartz dimension: −1 contrary, 0 neutral,
/// +1 aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct ValueVector([i8; 10]);

impl ValueVector {
    pub fn new(stances: &[i8]) -> Result<Self> {
        let arr: [i8; 10] = stances.try_into().map_err(|_| Error::DimensionMismatch {
            expected: 10,
            found: stances.len(),
        })?;
        if let Some(x) = arr.iter().find(|x| !(-1..=1).contains(*x)) {
            return Err(Error::invalid(format!("stance {x} not in {{-1, 0, +1}}")));
        }
        Ok(Self(arr))
    }

    pub fn stances(&self) -> &[i8; 10] {
        &self.0
    }
}

impl TryFrom<Vec<i8>> for ValueVector {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<ValueVector> for Vec<i8> {
    fn from(v: ValueVector) -> Self {
        v.0.to_vec()
    }
}

/// Strict form: exactly ten whitespace-separated tokens from `{-1, 0, +1, 1}`.
impl FromStr for ValueVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let stances = s
            .split_whitespace()
            .map(|t| match t {
                "-1" => Ok(-1),
                "0" => Ok(0),
                "+1" | "1" => Ok(1),
                other => Err(Error::invalid(format!("unexpected stance token {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Self::new(&stances)
    }
}

impl fmt::Display for ValueVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|x| match x {
                -1 => "-1",
                0 => "0",
                _ => "+1",
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Fraction of dimensions on which the two stances agree.
pub fn value_self_consistency(v0: &ValueVector, vstar: &ValueVector) -> f64 {
    let same = v0.0.iter().zip(&vstar.0).filter(|(a, b)| a == b).count();
    same as f64 / 10.0
}

/// Slice form of [`value_self_consistency`] that checks both lengths.
pub fn value_self_consistency_of(v0: &[i8], vstar: &[i8]) -> Result<f64> {
    if v0.len() != vstar.len() {
        return Err(Error::DimensionMismatch {
            expected: v0.len(),
            found: vstar.len(),
        });
    }
    Ok(value_self_consistency(&ValueVector::new(v0)?, &ValueVector::new(vstar)?))
}

pub fn mean_value_self_consistency(pairs: &[(ValueVector, ValueVector)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("no value vector pairs"));
    }
    Ok(pairs.iter().map(|(a, b)| value_self_consistency(a, b)).sum::<f64>() / pairs.len() as f64)
}

/// Means of the 24 VSM13 content questions; serialized as `{"m01": .., "m24": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct VsmMeans([f64; 24]);

impl VsmMeans {
    pub fn new(means: [f64; 24]) -> Result<Self> {
        for (i, m) in means.iter().enumerate() {
            if !(1.0..=5.0).contains(m) {
                return Err(Error::invalid(format!("m{:02} = {m} outside [1, 5]", i + 1)));
            }
        }
        Ok(Self(means))
    }

    /// All 24 means set to `value`.
    pub fn constant(value: f64) -> Result<Self> {
        Self::new([value; 24])
    }

    /// Mean of question `q` (1-based, as in the questionnaire).
    pub fn m(&self, q: usize) -> f64 {
        self.0[q - 1]
    }

    pub fn values(&self) -> &[f64; 24] {
        &self.0
    }
}

impl TryFrom<BTreeMap<String, f64>> for VsmMeans {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        let mut means = [0.0; 24];
        for (q, slot) in means.iter_mut().enumerate() {
            let key = format!("m{:02}", q + 1);
            *slot = *map
                .get(&key)
                .ok_or_else(|| Error::invalid(format!("missing {key}")))?;
        }
        if let Some(extra) = map.keys().find(|k| {
            k.strip_prefix('m')
                .and_then(|n| n.parse::<usize>().ok())
                .is_none_or(|n| !(1..=24).contains(&n) || k.len() != 3)
        }) {
            return Err(Error::invalid(format!("unexpected key {extra}")));
        }
        Self::new(means)
    }
}

impl From<VsmMeans> for BTreeMap<String, f64> {
    fn from(m: VsmMeans) -> Self {
        m.0.iter()
            .enumerate()
            .map(|(i, v)| (format!("m{:02}", i + 1), *v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HofstedeConstants {
    pub pdi: f64,
    pub idv: f64,
    pub mas: f64,
    pub uai: f64,
    pub lto: f64,
    pub ivr: f64,
}

impl Default for HofstedeConstants {
    fn default() -> Self {
        Self {
            pdi: 0.0,
            idv: 43.0,
            mas: 60.0,
            uai: 100.0,
            lto: -25.0,
            ivr: -15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HofstedeScores {
    pub pdi: f64,
    pub idv: f64,
    pub mas: f64,
    pub uai: f64,
    pub lto: f64,
    pub ivr: f64,
}

impl HofstedeScores {
    pub fn as_array(&self) -> [f64; 6] {
        [self.pdi, self.idv, self.mas, self.uai, self.lto, self.ivr]
    }
}

pub fn hofstede_scores(m: &VsmMeans, c: &HofstedeConstants) -> HofstedeScores {
    let d = |a: usize, b: usize| m.m(a) - m.m(b);
    HofstedeScores {
        pdi: 35.0 * d(7, 2) + 25.0 * d(20, 23) + c.pdi,
        idv: 35.0 * d(4, 1) + 35.0 * d(9, 6) + c.idv,
        mas: 35.0 * d(5, 3) + 35.0 * d(8, 10) + c.mas,
        uai: 40.0 * d(18, 15) + 25.0 * d(21, 24) + c.uai,
        lto: 40.0 * d(13, 14) + 25.0 * d(19, 22) + c.lto,
        ivr: 35.0 * d(12, 11) + 40.0 * d(17, 16) + c.ivr,
    }
}

/// Two-component principal projection of a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    pub mean: Vec<f64>,
    /// Unit loading vectors by descending variance; a component with no
    /// variance is all zeros.
    pub components: [Vec<f64>; 2],
    /// Sample-covariance eigenvalues of the two components.
    pub variances: [f64; 2],
    pub coords: Vec<[f64; 2]>,
}

/// Mean-centres the points and projects them on the top two eigenvectors of
/// the sample covariance. Each loading's sign is fixed so that its first
/// coordinate of non-negligible magnitude is positive.
///
/// The decomposition runs on whichever of the covariance (d×d) or the Gram
/// matrix (n×n) is smaller; both give the same projection.
pub fn pca_2d(points: &[Vec<f64>]) -> Result<Pca2> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("principal projection needs at least two points"));
    }
    let d = points[0].len();
    if d == 0 {
        return Err(Error::invalid("points have no coordinates"));
    }
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n as f64;
        }
    }
    let x: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, m)| a - m).collect())
        .collect();
    let scale = (n - 1) as f64;

    let (values, mut loadings): (Vec<f64>, Vec<Vec<f64>>) = if d <= n {
        let mut cov = vec![vec![0.0; d]; d];
        for row in &x {
            for i in 0..d {
                for j in i..d {
                    cov[i][j] += row[i] * row[j] / scale;
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                cov[i][j] = cov[j][i];
            }
        }
        let (vals, vecs) = symmetric_eigen(&cov);
        (vals.into_iter().take(2).collect(), vecs.into_iter().take(2).collect())
    } else {
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let g: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum::<f64>() / scale;
                gram[i][j] = g;
                gram[j][i] = g;
            }
        }
        let (vals, vecs) = symmetric_eigen(&gram);
        let top = vals.first().copied().unwrap_or(0.0).max(0.0);
        let mut loads = Vec::new();
        for (lambda, u) in vals.iter().zip(&vecs).take(2) {
            let mut v = vec![0.0; d];
            if *lambda > top * 1e-12 && *lambda > 0.0 {
                for (row, ui) in x.iter().zip(u) {
                    for (vk, xk) in v.iter_mut().zip(row) {
                        *vk += ui * xk;
                    }
                }
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= norm);
            }
            loads.push(v);
        }
        (vals.into_iter().take(2).collect(), loads)
    };
    let mut variances = [0.0; 2];
    for (slot, v) in variances.iter_mut().zip(&values) {
        *slot = v.max(0.0);
    }
    while loadings.len() < 2 {
        loadings.push(vec![0.0; d]);
    }
    for v in &mut loadings {
        let big = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if let Some(lead) = v.iter().find(|a| a.abs() > big * 1e-9) {
            if *lead < 0.0 {
                v.iter_mut().for_each(|a| *a = -*a);
            }
        }
    }
    let coords = x
        .iter()
        .map(|row| {
            let p = |v: &Vec<f64>| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            [p(&loadings[0]), p(&loadings[1])]
        })
        .collect();
    let second = loadings.pop().expect("two loadings");
    let first = loadings.pop().expect("two loadings");
    Ok(Pca2 {
        mean,
        components: [first, second],
        variances,
        coords,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessRecord {
    pub d_a: f64,
    pub d_b: f64,
    pub distance_to_diagonal: f64,
    pub pca: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessSummary {
    pub mean_abs_gap: f64,
    pub mean_distance_to_diagonal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessProjection {
    pub records: Vec<FairnessRecord>,
    pub summary: FairnessSummary,
    pub pca: Option<Pca2>,
}

/// Distances `(d_a, d_b)` as `1 − cos` to each anchor, the distance of
/// `(d_a, d_b)` to the line `d_a = d_b`, and the principal projection of the
/// consensus set when it has at least two points.
pub fn fairness_projection(
    consensus: &[Vec<f64>],
    anchor_a: &[f64],
    anchor_b: &[f64],
) -> Result<FairnessProjection> {
    if consensus.is_empty() {
        return Err(Error::invalid("no consensus embeddings"));
    }
    let pca = if consensus.len() >= 2 {
        Some(pca_2d(consensus)?)
    } else {
        None
    };
    let mut records = Vec::with_capacity(consensus.len());
    for (i, c) in consensus.iter().enumerate() {
        let d_a = 1.0 - cosine_similarity(c, anchor_a)?;
        let d_b = 1.0 - cosine_similarity(c, anchor_b)?;
        records.push(FairnessRecord {
            d_a,
            d_b,
            distance_to_diagonal: (d_a - d_b).abs() / std::f64::consts::SQRT_2,
            pca: pca.as_ref().map(|p| p.coords[i]),
        });
    }
    let n = records.len() as f64;
    let summary = FairnessSummary {
        mean_abs_gap: records.iter().map(|r| (r.d_a - r.d_b).abs()).sum::<f64>() / n,
        mean_distance_to_diagonal: records.iter().map(|r| r.distance_to_diagonal).sum::<f64>() / n,
    };
    Ok(FairnessProjection {
        records,
        summary,
        pca,
    })
}

/// One CSV row. Missing values (a degenerate baseline, no projection) are
/// written as empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub topic_id: String,
    pub ratio: Option<f64>,
    pub vsc_a: f64,
    pub vsc_b: f64,
    pub d_a: f64,
    pub d_b: f64,
    pub pca_x: Option<f64>,
    pub pca_y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub topics: usize,
    pub scored_topics: usize,
    pub excluded_topics: Vec<String>,
    pub acceptance_score: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub mean_vsc_a: f64,
    pub mean_vsc_b: f64,
    pub mean_vsc: f64,
    pub mean_abs_gap: f64,
    pub mean_distance_to_diagonal: f64,
}

pub fn summarize(rows: &[TopicMetrics]) -> Result<MetricsSummary> {
    if rows.is_empty() {
        return Err(Error::invalid("no topics to summarize"));
    }
    let n = rows.len() as f64;
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let excluded = rows
        .iter()
        .filter(|r| r.ratio.is_none())
        .map(|r| r.topic_id.clone())
        .collect();
    let mean = |f: &dyn Fn(&TopicMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let mean_vsc_a = mean(&|r| r.vsc_a);
    let mean_vsc_b = mean(&|r| r.vsc_b);
    Ok(MetricsSummary {
        topics: rows.len(),
        scored_topics: ratios.len(),
        excluded_topics: excluded,
        acceptance_score: if ratios.is_empty() { None } else { Some(acceptance_score(&ratios)?) },
        mean_ratio: if ratios.is_empty() { None } else { Some(mean_ratio(&ratios)?) },
        mean_vsc_a,
        mean_vsc_b,
        mean_vsc: (mean_vsc_a + mean_vsc_b) / 2.0,
        mean_abs_gap: mean(&|r| (r.d_a - r.d_b).abs()),
        mean_distance_to_diagonal: mean(&|r| (r.d_a - r.d_b).abs() / std::f64::consts::SQRT_2),
    })
}

pub fn metrics_csv(rows: &[TopicMetrics]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_metrics_csv(text: &str) -> Result<Vec<TopicMetrics>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Format {
                line: i + 2,
                column: 0,
                message: e.to_string(),
            })
        })
        .collect()
}
