//! Topic datasets, survey-proportional sample allocation and preference-pair
//! export.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transcript::NegotiationTranscript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicCategory {
    #[serde(alias = "Gender and Family Roles")]
    GenderAndFamilyRoles,
    #[serde(alias = "Religion and Secularism")]
    ReligionAndSecularism,
    #[serde(alias = "Politics and Governance")]
    PoliticsAndGovernance,
    #[serde(alias = "Law and Ethics")]
    LawAndEthics,
    #[serde(alias = "Social Norms and Modernization")]
    SocialNormsAndModernization,
    #[serde(alias = "International Relations and Security")]
    InternationalRelationsAndSecurity,
}

impl TopicCategory {
    pub const ALL: [TopicCategory; 6] = [
        TopicCategory::GenderAndFamilyRoles,
        TopicCategory::ReligionAndSecularism,
        TopicCategory::PoliticsAndGovernance,
        TopicCategory::LawAndEthics,
        TopicCategory::SocialNormsAndModernization,
        TopicCategory::InternationalRelationsAndSecurity,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            TopicCategory::GenderAndFamilyRoles => "Gender and Family Roles",
            TopicCategory::ReligionAndSecularism => "Religion and Secularism",
            TopicCategory::PoliticsAndGovernance => "Politics and Governance",
            TopicCategory::LawAndEthics => "Law and Ethics",
            TopicCategory::SocialNormsAndModernization => "Social Norms and Modernization",
            TopicCategory::InternationalRelationsAndSecurity => "International Relations and Security",
        }
    }
}

impl fmt::Display for TopicCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TopicSource {
    #[serde(rename = "GAS")]
    Gas,
    #[serde(rename = "WVS")]
    Wvs,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub id: String,
    pub question: String,
    pub category: TopicCategory,
    pub source: TopicSource,
}

impl Topic {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::invalid("topic id is empty"));
        }
        if !self.question.trim_start().starts_with("Should") {
            return Err(Error::invalid(format!(
                "question must start with \"Should\": {:?}",
                self.question
            )));
        }
        Ok(())
    }
}

/// A rejected record: its position in the array, its id when readable, and
/// why it was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDiagnostic {
    pub index: usize,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for TopicDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "record {} ({id}): {}", self.index, self.message),
            None => write!(f, "record {}: {}", self.index, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TopicLoad {
    pub topics: Vec<Topic>,
    pub diagnostics: Vec<TopicDiagnostic>,
}

/// Parses a JSON array of `{id, question, category, source}` records.
/// Malformed JSON is a format error; invalid records are skipped with a
/// diagnostic each.
pub fn parse_topics(text: &str) -> Result<TopicLoad> {
    if text.trim().is_empty() {
        return Err(Error::invalid("topic file is empty"));
    }
    let value: serde_json::Value = serde_json::from_str(text)?;
    let records = value
        .as_array()
        .ok_or_else(|| Error::invalid("topic file must hold a JSON array"))?;
    if records.is_empty() {
        return Err(Error::invalid("topic file holds no records"));
    }
    let mut load = TopicLoad::default();
    let mut seen = BTreeSet::new();
    for (index, record) in records.iter().enumerate() {
        let id = record.get("id").and_then(|v| v.as_str()).map(str::to_owned);
        let reject = |message: String| TopicDiagnostic {
            index,
            id: id.clone(),
            message,
        };
        let topic: Topic = match serde_json::from_value(record.clone()) {
            Ok(t) => t,
            Err(e) => {
                load.diagnostics.push(reject(e.to_string()));
                continue;
            }
        };
        if let Err(e) = topic.validate() {
            load.diagnostics.push(reject(e.to_string()));
            continue;
        }
        if !seen.insert(topic.id.clone()) {
            load.diagnostics.push(reject(format!("duplicate topic id {}", topic.id)));
            continue;
        }
        load.topics.push(topic);
    }
    Ok(load)
}

pub fn load_topics(path: &Path) -> Result<TopicLoad> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_topics(&text)
}

/// Option shares and a target sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRequest {
    pub shares: Vec<f64>,
    pub target: u64,
}

impl AllocationRequest {
    pub fn new(shares: Vec<f64>, target: u64) -> Result<Self> {
        let req = Self { shares, target };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shares.is_empty() {
            return Err(Error::invalid("no shares"));
        }
        if let Some(s) = self.shares.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::invalid(format!("share {s} is negative or not finite")));
        }
        let sum: f64 = self.shares.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("shares sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// `round(s_i·K)` with halves away from zero, then a largest-remainder repair
/// so the counts sum to `K`. Ties go to the lowest index.
pub fn allocate_samples(req: &AllocationRequest) -> Result<Vec<u64>> {
    req.validate()?;
    let k = req.target as f64;
    let exact: Vec<f64> = req.shares.iter().map(|s| s * k).collect();
    let mut counts: Vec<u64> = exact.iter().map(|x| x.round() as u64).collect();
    let remainder = |i: usize, c: &[u64]| exact[i] - c[i] as f64;
    let total: u64 = counts.iter().sum();
    if total != req.target {
        let mut order: Vec<usize> = (0..counts.len()).collect();
        let snapshot = counts.clone();
        if total < req.target {
            order.sort_by(|&i, &j| {
                remainder(j, &snapshot)
                    .partial_cmp(&remainder(i, &snapshot))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(&j))
            });
            for &i in order.iter().cycle().take((req.target - total) as usize) {
                counts[i] += 1;
            }
        } else {
            order.retain(|&i| snapshot[i] > 0);
            order.sort_by(|&i, &j| {
                remainder(i, &snapshot)
                    .partial_cmp(&remainder(j, &snapshot))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(i.cmp(&j))
            });
            let mut excess = total - req.target;
            for &i in order.iter().cycle() {
                if excess == 0 {
                    break;
                }
                if counts[i] > 0 {
                    counts[i] -= 1;
                    excess -= 1;
                }
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

/// For each culture: the topic question, its final consensus response as
/// chosen and its initial response as rejected.
pub fn export_preference_pairs(t: &NegotiationTranscript) -> Result<Vec<PreferencePair>> {
    let mut pairs = Vec::with_capacity(2);
    for (culture, initial, last) in [
        (&t.cultures.a, &t.initial_responses.a, &t.final_responses.a),
        (&t.cultures.b, &t.initial_responses.b, &t.final_responses.b),
    ] {
        let missing = |what: &str| {
            Error::IncompleteTranscript(format!("{what} response missing for culture {}", culture.id))
        };
        let rejected = initial.clone().ok_or_else(|| missing("initial"))?;
        let chosen = last.clone().ok_or_else(|| missing("final"))?;
        pairs.push(PreferencePair {
            prompt: t.topic.question.clone(),
            chosen,
            rejected,
        });
    }
    Ok(pairs)
}

pub fn preference_pairs_jsonl(pairs: &[PreferencePair]) -> Result<String> {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_preference_pairs(text: &str) -> Result<Vec<PreferencePair>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Format {
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alloc(s: &[f64], k: u64) -> Vec<u64> {
        allocate_samples(&AllocationRequest::new(s.to_vec(), k).unwrap()).unwrap()
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(alloc(&[0.5, 0.3, 0.2], 10), vec![5, 3, 2]);
        assert_eq!(alloc(&[1.0 / 3.0; 3], 10), vec![4, 3, 3]);
        assert_eq!(alloc(&[1.0], 7), vec![7]);
        assert_eq!(alloc(&[0.5, 0.5], 0), vec![0, 0]);
        // 0.25·2 rounds up to 1 on all four entries; the two lowest indices give back.
        assert_eq!(alloc(&[0.25; 4], 2), vec![0, 0, 1, 1]);
        assert!(AllocationRequest::new(vec![1.2, -0.2], 5).is_err());
        assert!(AllocationRequest::new(vec![0.5, 0.4], 5).is_err());
    }

    #[test]
    fn topic_records_are_screened() {
        let text = r#"[
            {"id": "t1", "question": "Should elders choose spouses?", "category": "gender_and_family_roles", "source": "WVS"},
            {"id": "t2", "question": "Should prayer be taught in schools?", "category": "Religion and Secularism", "source": "GAS"},
            {"id": "t3", "question": "Should fans boo?", "category": "Sports", "source": "GAS"},
            {"id": "t4", "question": "Is democracy widely beneficial?", "category": "politics_and_governance", "source": "WVS"},
            {"id": "t1", "question": "Should x?", "category": "law_and_ethics", "source": "WVS"},
            {"question": "Should y?", "category": "law_and_ethics", "source": "XYZ"}
        ]"#;
        let load = parse_topics(text).unwrap();
        assert_eq!(load.topics.len(), 2);
        let ids: Vec<_> = load.diagnostics.iter().map(|d| (d.index, d.id.clone())).collect();
        assert_eq!(
            ids,
            vec![(2, Some("t3".into())), (3, Some("t4".into())), (4, Some("t1".into())), (5, None)]
        );
        assert!(load.diagnostics[1].message.contains("Should"));
    }

    #[test]
    fn malformed_and_empty_files() {
        assert!(matches!(parse_topics(""), Err(Error::InvalidInput(_))));
        assert!(matches!(parse_topics("[]"), Err(Error::InvalidInput(_))));
        match parse_topics("[\n  {\"id\": 1,,}\n]") {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn jsonl_errors_carry_line() {
        let err = parse_preference_pairs("{\"prompt\":\"p\",\"chosen\":\"c\",\"rejected\":\"r\"}\n{oops}\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }
}
