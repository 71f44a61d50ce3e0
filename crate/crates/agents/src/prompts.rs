//! Versioned prompt templates and culture profiles.

use std::collections::BTreeMap;

use accord_core::transcript::CandidateMode;
use accord_core::types::CultureId;
use accord_core::verbalizer::fill;
use serde::Deserialize;

use crate::error::{AgentError, Result};

const PROMPTS_V1: &str = include_str!("../assets/prompts.v1.toml");
const CULTURES_V1: &str = include_str!("../assets/cultures.v1.json");

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct ModeInstructions {
    pub adversarial: String,
    pub complementary: String,
    pub innovative: String,
}

impl ModeInstructions {
    pub fn get(&self, mode: CandidateMode) -> &str {
        match mode {
            CandidateMode::Adversarial => &self.adversarial,
            CandidateMode::Complementary => &self.complementary,
            CandidateMode::Innovative => &self.innovative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PromptSet {
    pub version: u32,
    pub system: String,
    pub initial_response: String,
    pub elicit: String,
    pub analysis: String,
    pub candidates: String,
    pub final_response: String,
    pub candidate_format: String,
    pub judge: String,
    pub screening: String,
    pub modes: ModeInstructions,
}

impl PromptSet {
    pub fn bundled() -> Self {
        Self::from_toml(PROMPTS_V1).expect("bundled prompts parse")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AgentError::Config(format!("prompt templates: {e}")))
    }

    pub fn render(template: &str, slots: &[(&str, &str)]) -> Result<String> {
        Ok(fill(template, slots)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CultureProfile {
    pub id: String,
    pub display_name: String,
    pub profile: String,
}

impl CultureProfile {
    pub fn culture_id(&self) -> Result<CultureId> {
        Ok(CultureId::new(&self.id, &self.display_name)?)
    }
}

/// Bundled profiles keyed by culture id.
pub fn culture_profiles() -> BTreeMap<String, CultureProfile> {
    let list: Vec<CultureProfile> = serde_json::from_str(CULTURES_V1).expect("bundled culture profiles parse");
    list.into_iter().map(|p| (p.id.clone(), p)).collect()
}

/// The bundled profile for `id`, or a neutral one naming the culture.
pub fn culture_profile(id: &str) -> CultureProfile {
    culture_profiles().remove(id).unwrap_or_else(|| CultureProfile {
        id: id.to_owned(),
        display_name: id.replace('_', " "),
        profile: format!("The values commonly held in {} culture.", id.replace('_', " ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_templates_fill() {
        let p = PromptSet::bundled();
        let s = PromptSet::render(
            &p.system,
            &[("culture", "X"), ("opponent", "Y"), ("topic", "Should t?"), ("profile", "p")],
        )
        .unwrap();
        assert!(s.contains("Should t?"));
        assert!(PromptSet::render(&p.system, &[("culture", "X")]).is_err());
        assert_eq!(culture_profiles().len(), 8);
        assert_eq!(culture_profile("martian").display_name, "martian");
    }
}
