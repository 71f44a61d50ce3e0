//! Rule-based rendering of a weight distribution into a position statement.
//!
//! Every step is a fixed rule so that the same weights always produce the same
//! text: per-guideline intensity labels, change labels against the previous
//! round, a ranking by weight, a dispersion summary and a closing summary of
//! the overall movement. Sentence shapes come from a versioned JSON template
//! asset with `{slot}` placeholders.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{Guideline, WeightDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    ExtremelyLow,
    Low,
    Moderate,
    High,
    ExtremelyHigh,
}

impl Intensity {
    pub const ALL: [Intensity; 5] = [
        Intensity::ExtremelyLow,
        Intensity::Low,
        Intensity::Moderate,
        Intensity::High,
        Intensity::ExtremelyHigh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Intensity::ExtremelyLow => "extremely low",
            Intensity::Low => "low",
            Intensity::Moderate => "moderate",
            Intensity::High => "high",
            Intensity::ExtremelyHigh => "extremely high",
        }
    }
}

impl fmt::Display for Intensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Four cut points splitting `[0, 1]` into the five intensity labels; a weight
/// equal to a cut point takes the higher label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityScale {
    cuts: [f64; 4],
}

impl Default for IntensityScale {
    fn default() -> Self {
        Self {
            cuts: [0.12, 0.25, 0.40, 0.60],
        }
    }
}

impl IntensityScale {
    pub fn new(cuts: [f64; 4]) -> Result<Self> {
        let inside = cuts.iter().all(|c| *c > 0.0 && *c < 1.0);
        if !inside || cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "intensity cut points must be strictly increasing inside (0, 1), got {cuts:?}"
            )));
        }
        Ok(Self { cuts })
    }

    pub fn cuts(&self) -> [f64; 4] {
        self.cuts
    }

    pub fn label(&self, weight: f64) -> Result<Intensity> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::invalid(format!("weight {weight} outside [0, 1]")));
        }
        let idx = self.cuts.iter().take_while(|c| weight >= **c).count();
        Ok(Intensity::ALL[idx])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increased,
    Decreased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeDegree {
    Slight,
    Moderate,
    Notable,
    Significant,
}

impl ChangeDegree {
    fn adverb(self) -> &'static str {
        match self {
            ChangeDegree::Slight => "slightly",
            ChangeDegree::Moderate => "moderately",
            ChangeDegree::Notable => "notably",
            ChangeDegree::Significant => "significantly",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Change {
    NewlyProposed,
    NoChange,
    Moved {
        degree: ChangeDegree,
        direction: Direction,
    },
}

impl fmt::Display for Change {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Change::NewlyProposed => f.write_str("newly proposed"),
            Change::NoChange => f.write_str("no change"),
            Change::Moved { degree, direction } => {
                let dir = match direction {
                    Direction::Increased => "increased",
                    Direction::Decreased => "decreased",
                };
                write!(f, "{} {dir}", degree.adverb())
            }
        }
    }
}

/// Four `|Δ|` cut points for slight, moderate, notable and significant moves;
/// anything below the first is no change. Differences are compared with a
/// `1e-12` slack so that, say, `0.45 − 0.40` counts as a move of `0.05`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeScale {
    cuts: [f64; 4],
}

impl Default for ChangeScale {
    fn default() -> Self {
        Self {
            cuts: [0.01, 0.05, 0.10, 0.20],
        }
    }
}

impl ChangeScale {
    pub fn new(cuts: [f64; 4]) -> Result<Self> {
        if cuts[0] <= 0.0 || cuts.windows(2).any(|w| w[0] >= w[1]) || cuts[3] > 1.0 {
            return Err(Error::invalid(format!(
                "change cut points must be strictly increasing in (0, 1], got {cuts:?}"
            )));
        }
        Ok(Self { cuts })
    }

    pub fn cuts(&self) -> [f64; 4] {
        self.cuts
    }

    pub fn label(&self, prev: Option<f64>, new: f64) -> Change {
        let Some(prev) = prev else {
            return Change::NewlyProposed;
        };
        let delta = new - prev;
        let size = delta.abs() + CHANGE_SLACK;
        let degree = match self.cuts.iter().take_while(|c| size >= **c).count() {
            0 => return Change::NoChange,
            1 => ChangeDegree::Slight,
            2 => ChangeDegree::Moderate,
            3 => ChangeDegree::Notable,
            _ => ChangeDegree::Significant,
        };
        let direction = if delta > 0.0 {
            Direction::Increased
        } else {
            Direction::Decreased
        };
        Change::Moved { degree, direction }
    }
}

const CHANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    Concentrated,
    Balanced,
    Mixed,
}

/// Largest weight at or above which a distribution counts as concentrated.
pub const CONCENTRATED_MAX: f64 = 0.6;
/// Normalized entropy at or above which a non-concentrated distribution
/// counts as balanced.
pub const BALANCED_ENTROPY: f64 = 0.85;

/// Concentrated when the top weight reaches [`CONCENTRATED_MAX`]; otherwise
/// balanced when the Shannon entropy divided by `ln n` reaches
/// [`BALANCED_ENTROPY`]; otherwise mixed.
pub fn dispersion(weights: &[f64]) -> Dispersion {
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max >= CONCENTRATED_MAX || weights.len() < 2 {
        return Dispersion::Concentrated;
    }
    let h: f64 = weights.iter().filter(|w| **w > 0.0).map(|w| -w * w.ln()).sum();
    if h / (weights.len() as f64).ln() >= BALANCED_ENTROPY {
        Dispersion::Balanced
    } else {
        Dispersion::Mixed
    }
}

/// Weights that print as `0.00` are rendered as set aside.
pub const ZERO_WEIGHT: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispersionPhrases {
    pub concentrated: String,
    pub balanced: String,
    pub mixed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryPhrases {
    pub opening: String,
    pub concession: String,
    pub shift: String,
    pub unchanged: String,
}

/// Sentence templates; `{name}` marks a slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeechTemplates {
    pub version: u32,
    pub opening: String,
    pub dispersion: DispersionPhrases,
    pub entry: String,
    pub entry_zero: String,
    pub summary: SummaryPhrases,
    pub closing: String,
    /// Stage-two announcement of a newly admitted guideline.
    pub claim: String,
}

const TEMPLATES_V1: &str = include_str!("../assets/verbalizer/speech.v1.json");

impl SpeechTemplates {
    /// The bundled template set.
    pub fn bundled() -> Self {
        Self::from_json(TEMPLATES_V1).expect("bundled speech templates parse")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        fill(&t.opening, &[("dispersion", "")])?;
        fill(
            &t.entry,
            &[("rank", ""), ("content", ""), ("weight", ""), ("intensity", ""), ("change", "")],
        )?;
        fill(&t.entry_zero, &[("rank", ""), ("content", ""), ("weight", "")])?;
        fill(&t.claim, &[("content", ""), ("reason", ""), ("description", "")])?;
        Ok(t)
    }
}

/// Substitutes every `{name}` slot; an unknown or unfilled slot is an error.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> Result<String> {
    let values: BTreeMap<&str, &str> = slots.iter().copied().collect();
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| Error::invalid(format!("unclosed slot in template {template:?}")))?;
        let name = &after[..close];
        let value = values
            .get(name)
            .ok_or_else(|| Error::invalid(format!("unknown slot {{{name}}} in template")))?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verbalizer {
    pub intensity: IntensityScale,
    pub change: ChangeScale,
    pub templates: SpeechTemplates,
}

impl Default for Verbalizer {
    fn default() -> Self {
        Self {
            intensity: IntensityScale::default(),
            change: ChangeScale::default(),
            templates: SpeechTemplates::bundled(),
        }
    }
}

/// Trims `s` and ends it with a full stop unless it already has terminal
/// punctuation.
fn sentence(s: &str) -> String {
    let s = s.trim();
    match s.chars().last() {
        Some('.' | '!' | '?') | None => s.to_owned(),
        Some(_) => format!("{s}."),
    }
}

impl Verbalizer {
    pub fn render_claim(&self, g: &Guideline) -> Result<String> {
        fill(
            &self.templates.claim,
            &[
                ("content", &sentence(&g.content)),
                ("reason", &sentence(&g.reason)),
                ("description", &sentence(&g.description)),
            ],
        )
    }

    /// Renders one culture's position. `prev` is the previous round's
    /// distribution, if any; guidelines missing from it are newly proposed.
    pub fn render<T: Scalar>(
        &self,
        guidelines: &[Guideline],
        weights: &WeightDistribution<T>,
        prev: Option<&WeightDistribution<T>>,
    ) -> Result<String> {
        let gids: Vec<_> = guidelines.iter().map(|g| g.gid.clone()).collect();
        weights.validate()?;
        if !weights.indexes(&gids) {
            return Err(Error::invalid(
                "weights do not index the guidelines being described",
            ));
        }
        if let Some(p) = prev {
            p.validate()?;
            if let Some((g, _)) = p.entries().iter().find(|(g, _)| !gids.contains(g)) {
                return Err(Error::invalid(format!(
                    "previous weights mention {g}, which is not among the guidelines"
                )));
            }
        }
        let w: Vec<f64> = weights.values().into_iter().map(Scalar::as_f64).collect();
        let prev_of = |i: usize| prev.and_then(|p| p.get(&gids[i])).map(Scalar::as_f64);

        let mut order: Vec<usize> = (0..guidelines.len()).collect();
        order.sort_by(|&i, &j| {
            w[j].partial_cmp(&w[i])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| gids[i].cmp(&gids[j]))
        });

        let t = &self.templates;
        let phrase = match dispersion(&w) {
            Dispersion::Concentrated => &t.dispersion.concentrated,
            Dispersion::Balanced => &t.dispersion.balanced,
            Dispersion::Mixed => &t.dispersion.mixed,
        };
        let mut lines = vec![fill(&t.opening, &[("dispersion", phrase)])?];
        for (rank, &i) in order.iter().enumerate() {
            let rank = (rank + 1).to_string();
            let weight = format!("{:.2}", w[i]);
            let content = guidelines[i].content.trim();
            let line = if w[i] < ZERO_WEIGHT {
                fill(
                    &t.entry_zero,
                    &[("rank", &rank), ("content", content), ("weight", &weight)],
                )?
            } else {
                let intensity = self.intensity.label(w[i].min(1.0))?;
                let change = self.change.label(prev_of(i), w[i]);
                fill(
                    &t.entry,
                    &[
                        ("rank", &rank),
                        ("content", content),
                        ("weight", &weight),
                        ("intensity", intensity.as_str()),
                        ("change", &change.to_string()),
                    ],
                )?
            };
            lines.push(line);
        }
        let summary = match prev {
            None => &t.summary.opening,
            Some(p) => {
                let former_leader = p
                    .entries()
                    .iter()
                    .enumerate()
                    .fold(None, |best: Option<(usize, f64)>, (k, (_, x))| {
                        let x = x.as_f64();
                        match best {
                            Some((_, b)) if b >= x => best,
                            _ => Some((k, x)),
                        }
                    })
                    .map(|(k, x)| (p.entries()[k].0.clone(), x));
                let gave_ground = former_leader.is_some_and(|(g, before)| {
                    let now = weights.get(&g).map_or(0.0, Scalar::as_f64);
                    matches!(
                        self.change.label(Some(before), now),
                        Change::Moved { direction: Direction::Decreased, .. }
                    )
                });
                let moved = (0..w.len()).any(|i| self.change.label(prev_of(i), w[i]) != Change::NoChange);
                if gave_ground {
                    &t.summary.concession
                } else if moved {
                    &t.summary.shift
                } else {
                    &t.summary.unchanged
                }
            }
        };
        lines.push(format!("{summary} {}", t.closing));
        Ok(lines.join("\n"))
    }
}

pub fn intensity_label(weight: f64) -> Result<Intensity> {
    IntensityScale::default().label(weight)
}

pub fn change_label(prev: Option<f64>, new: f64) -> Change {
    ChangeScale::default().label(prev, new)
}

/// [`Verbalizer::render`] with the default scales and bundled templates.
/// Claim speech for a newly admitted guideline with the bundled templates.
pub fn render_claim_speech(guideline: &Guideline) -> Result<String> {
    Verbalizer::default().render_claim(guideline)
}

pub fn render_position_speech<T: Scalar>(
    guidelines: &[Guideline],
    weights: &WeightDistribution<T>,
    prev: Option<&WeightDistribution<T>>,
) -> Result<String> {
    Verbalizer::default().render(guidelines, weights, prev)
}
