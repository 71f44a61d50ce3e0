//! Offline chat stand-in for scripted command-line runs: answers every
//! request with seeded text in the expected shape, so whole negotiations run
//! without a model and repeat byte for byte.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::chat::{ChatProvider, ChatRequest};
use crate::error::ProviderError;
use crate::oracle::{BLOCK_END, BLOCK_START};

const VERBS: [&str; 8] = [
    "Protect", "Respect", "Balance", "Support", "Encourage", "Limit", "Guarantee", "Promote",
];
const OBJECTS: [&str; 10] = [
    "family consultation",
    "individual choice",
    "community harmony",
    "religious freedom",
    "public accountability",
    "equal opportunity",
    "local traditions",
    "open debate",
    "care for elders",
    "the rule of law",
];
const QUALIFIERS: [&str; 6] = [
    "in every household",
    "through public institutions",
    "within the community",
    "for future generations",
    "under clear legal limits",
    "while listening to dissent",
];
const REASONS: [&str; 6] = [
    "It keeps trust between generations.",
    "People accept rules they helped shape.",
    "Stable institutions depend on it.",
    "It protects those with the least power.",
    "Shared customs give life meaning.",
    "Freedom without responsibility erodes itself.",
];
const DESCRIPTIONS: [&str; 6] = [
    "Decisions are discussed openly before they are made.",
    "Local bodies review how the rule works each year.",
    "Families keep a voice without holding a veto.",
    "Schools teach both the rule and its limits.",
    "Exceptions are allowed when someone would be harmed.",
    "Courts settle disputes that talks cannot.",
];

#[derive(Debug, Clone, Copy)]
pub struct SyntheticChat {
    seed: u64,
}

impl SyntheticChat {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    fn rng(&self, req: &ChatRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(req.key.to_string().as_bytes());
        h.update(req.system_prompt.as_bytes());
        for m in &req.messages {
            h.update(m.content.as_bytes());
        }
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn block(rng: &mut ChaCha8Rng, own: Option<&str>) -> String {
        let tail = QUALIFIERS.choose(rng).expect("non-empty");
        let content = match own {
            Some(o) if rng.random_bool(0.5) => format!("{} {tail}", o.trim_end_matches('.')),
            _ => format!(
                "{} {} {tail}",
                VERBS.choose(rng).expect("non-empty"),
                OBJECTS.choose(rng).expect("non-empty")
            ),
        };
        format!(
            "{BLOCK_START}\nCONTENT: {content}\nREASON: {}\nDESCRIPTION: {}\n{BLOCK_END}",
            REASONS.choose(rng).expect("non-empty"),
            DESCRIPTIONS.choose(rng).expect("non-empty"),
        )
    }

    fn prose(rng: &mut ChaCha8Rng, sentences: usize) -> String {
        (0..sentences)
            .map(|_| {
                format!(
                    "We {} {} {}.",
                    VERBS.choose(rng).expect("non-empty").to_lowercase(),
                    OBJECTS.choose(rng).expect("non-empty"),
                    QUALIFIERS.choose(rng).expect("non-empty")
                )
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// The number following `marker` in `text`, if any.
fn count_after(text: &str, marker: &str) -> Option<usize> {
    let rest = &text[text.find(marker)? + marker.len()..];
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

/// First numbered entry under "Your guidelines so far:".
fn first_own_guideline(text: &str) -> Option<&str> {
    let rest = &text[text.find("Your guidelines so far:")?..];
    rest.lines().find_map(|l| l.strip_prefix("1. "))
}

impl ChatProvider for SyntheticChat {
    fn complete(&self, req: &ChatRequest) -> Result<String, ProviderError> {
        req.validate()?;
        let mut rng = self.rng(req);
        let user = &req.messages.last().expect("validated").content;
        let stage = req.key.stage.as_str();
        Ok(if stage == "elicit" || stage.starts_with("candidates:") {
            let n = count_after(user, "Propose ")
                .or_else(|| count_after(user, "State "))
                .unwrap_or(2)
                .clamp(1, 8);
            let own = first_own_guideline(user);
            (0..n).map(|_| Self::block(&mut rng, own)).collect::<Vec<_>>().join("\n")
        } else if stage == "analysis" {
            format!(
                "Their position leaves {} underdeveloped. {}",
                OBJECTS.choose(&mut rng).expect("non-empty"),
                Self::prose(&mut rng, 1)
            )
        } else {
            Self::prose(&mut rng, 3)
        })
    }
}
