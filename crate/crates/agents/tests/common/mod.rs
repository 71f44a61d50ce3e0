//! Scripted negotiation fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use accord_agents::chat::{ScriptEntry, ScriptedChat};
use accord_agents::http::{HttpRequest, HttpResponse, Sleeper, Transport};
use accord_agents::oracle::ModeCounts;
use accord_agents::orchestrator::{GameConfig, Negotiation, Negotiator};
use accord_agents::prompts::culture_profile;
use accord_core::embedding::DeterministicEmbedder;
use accord_core::transcript::{PerCulture, TopicRef};
use accord_core::types::{GuidelineDraft, UtilityConfig};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    pub question: String,
    pub a0: [String; 3],
    pub b0: [String; 3],
    pub script: Vec<ScriptEntry>,
}

pub fn path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

impl Scenario {
    pub fn load(name: &str) -> Scenario {
        let text = std::fs::read_to_string(path(&format!("fixtures/{name}.json"))).unwrap();
        serde_json::from_str(&text).unwrap()
    }

    pub fn chat(&self) -> ScriptedChat {
        ScriptedChat::new(self.script.clone())
    }

    pub fn initial(&self) -> PerCulture<Vec<GuidelineDraft>> {
        let d = |x: &[String; 3]| vec![GuidelineDraft::new(&x[0], &x[1], &x[2]).unwrap()];
        PerCulture::new(d(&self.a0), d(&self.b0))
    }

    pub fn topic(&self) -> TopicRef {
        TopicRef {
            id: "career_choice".into(),
            question: self.question.clone(),
        }
    }

    /// Builds the game with the scenario's own initial guidelines.
    pub fn start(&self, neg: &Negotiator<'_>) -> Negotiation {
        neg.initialize_game(
            self.topic(),
            PerCulture::new(culture_profile("english_speaking"), culture_profile("confucian")),
            Some(self.initial()),
        )
        .unwrap()
    }
}

/// One candidate per mode. The two-round scenario weights acceptance more
/// heavily than the 5:5:2 default; see the README.
pub fn config(utility: UtilityConfig<f64>, max_rounds: u32) -> GameConfig {
    let mut cfg = GameConfig::default();
    cfg.utility = utility;
    cfg.max_rounds = max_rounds;
    cfg.oracle.counts = ModeCounts { adversarial: 1, complementary: 1, innovative: 1 };
    cfg
}

pub fn two_round_config() -> GameConfig {
    config(UtilityConfig::new(5.0, 8.0, 2.0, 0.0).unwrap(), 2)
}

/// Runs `scenario` to completion, final answers included.
pub fn play(scenario: &Scenario, cfg: GameConfig) -> Negotiation {
    let chat = scenario.chat();
    let emb = DeterministicEmbedder::new();
    let neg = Negotiator::new(cfg, &chat, &emb).unwrap();
    let n = neg.run_to_consensus(scenario.start(&neg)).unwrap();
    assert_eq!(chat.remaining(), 0, "script not fully consumed");
    n
}

/// Compares `actual` with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn golden(name: &str, actual: &str) -> bool {
    let p = path(&format!("golden/{name}"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&p, actual).unwrap();
    }
    std::fs::read_to_string(&p).map(|g| g == actual).unwrap_or(false)
}

/// Replays canned statuses and counts calls.
pub struct FakeTransport {
    statuses: Mutex<VecDeque<u16>>,
    fallback: u16,
    calls: Mutex<u32>,
}

impl FakeTransport {
    pub fn new(statuses: &[u16], fallback: u16) -> Arc<Self> {
        Arc::new(Self {
            statuses: Mutex::new(statuses.iter().copied().collect()),
            fallback,
            calls: Mutex::new(0),
        })
    }

    pub fn calls(&self) -> u32 {
        *self.calls.lock().unwrap()
    }
}

impl Transport for FakeTransport {
    fn post(&self, _req: &HttpRequest) -> Result<HttpResponse, String> {
        *self.calls.lock().unwrap() += 1;
        let status = self.statuses.lock().unwrap().pop_front().unwrap_or(self.fallback);
        Ok(HttpResponse {
            status,
            body: r#"{"ok":true}"#.into(),
        })
    }
}

#[derive(Default)]
pub struct RecordingSleeper(pub Mutex<Vec<Duration>>);

impl Sleeper for RecordingSleeper {
    fn sleep(&self, d: Duration) {
        self.0.lock().unwrap().push(d);
    }
}
