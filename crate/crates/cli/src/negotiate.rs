//! Batch negotiation runs: one transcript per topic plus a run manifest.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use accord_agents::chat::ChatProvider;
use accord_agents::config::{GameSettings, ProviderMode, ProviderSettings};
use accord_agents::orchestrator::{GameConfig, Negotiator};
use accord_agents::prompts::{culture_profiles, CultureProfile};
use accord_agents::synthetic::SyntheticChat;
use accord_agents::AgentError;
use accord_core::embedding::{CachedEmbedder, DeterministicEmbedder, Embedder};
use accord_core::ingest::{load_topics, Topic};
use accord_core::io::write_atomic;
use accord_core::transcript::{GameStatus, NegotiationTranscript, PerCulture, TopicRef};
use serde::Serialize;

use crate::args::NegotiateArgs;
use crate::error::{CliError, Result, EXIT_OK, EXIT_PROVIDER, EXIT_VALIDATION};

pub const MANIFEST: &str = "manifest.json";
pub const TRANSCRIPTS: &str = "transcripts";
const EMBEDDING_CACHE: &str = "embedding_cache.json";

#[derive(Debug, Serialize)]
struct Completed {
    id: String,
    file: String,
    status: GameStatus,
    rounds_played: u32,
}

#[derive(Debug, Serialize)]
struct Failure {
    id: String,
    kind: &'static str,
    error: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    topics_file: String,
    cultures: &'a [String],
    seed: u64,
    provider: &'a ProviderSettings,
    game: &'a GameSettings,
    completed: Vec<Completed>,
    failures: Vec<Failure>,
}

/// Transcript file name for a topic id, keeping it inside the output
/// directory whatever the id contains.
pub fn transcript_file_name(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{safe}.json")
}

fn select_topics(args: &NegotiateArgs) -> Result<Vec<Topic>> {
    let load = load_topics(&args.topics)?;
    for d in &load.diagnostics {
        log::warn!("skipping {d}");
    }
    for id in &args.ids {
        if !load.topics.iter().any(|t| &t.id == id) {
            return Err(CliError::validation(format!("topic {id:?} is not in {}", args.topics.display())));
        }
    }
    let topics: Vec<Topic> = load
        .topics
        .into_iter()
        .filter(|t| args.ids.is_empty() || args.ids.contains(&t.id))
        .filter(|t| args.category.is_none_or(|c| c == t.category))
        .collect();
    if topics.is_empty() {
        return Err(CliError::validation("no topics match the selection"));
    }
    Ok(topics)
}

fn select_cultures(ids: &[String]) -> Result<PerCulture<CultureProfile>> {
    let mut known = culture_profiles();
    let [a, b] = ids else {
        return Err(CliError::Usage(format!("--cultures takes exactly two ids, got {}", ids.len())));
    };
    if a == b {
        return Err(CliError::Usage(format!("--cultures names {a} twice")));
    }
    let mut take = |id: &str| {
        known.remove(id).ok_or_else(|| {
            let names: Vec<_> = culture_profiles().into_keys().collect();
            CliError::Usage(format!("unknown culture {id:?}; known: {}", names.join(", ")))
        })
    };
    Ok(PerCulture::new(take(a)?, take(b)?))
}

fn negotiate_topic(
    topic: &Topic,
    profiles: &PerCulture<CultureProfile>,
    cfg: &GameConfig,
    chat: &dyn ChatProvider,
    embedder: &dyn Embedder,
) -> std::result::Result<NegotiationTranscript, AgentError> {
    let neg = Negotiator::new(cfg.clone(), chat, embedder)?;
    let topic = TopicRef {
        id: topic.id.clone(),
        question: topic.question.clone(),
    };
    let n = neg.initialize_game(topic, profiles.clone(), None)?;
    Ok(neg.run_to_consensus(n)?.transcript)
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
fn run_pool<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let r = f(item);
                slots.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item ran"))
        .collect()
}

pub fn run(args: &NegotiateArgs) -> Result<i32> {
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let mut app = args.provider.load()?;
    args.game.apply(&mut app.game);
    let cfg = app.game.to_game_config()?;
    let profiles = select_cultures(&args.cultures)?;
    let topics = select_topics(args)?;

    let transcripts_dir = args.out.join(TRANSCRIPTS);
    std::fs::create_dir_all(&transcripts_dir)
        .map_err(|e| CliError::validation(format!("{}: {e}", transcripts_dir.display())))?;

    let offline = DeterministicEmbedder::new();
    let (chat, cache): (Box<dyn ChatProvider>, _) = match app.provider.mode {
        ProviderMode::Scripted => (Box::new(SyntheticChat::new(args.seed)), None),
        ProviderMode::Remote => {
            let http = app.provider.http_client()?;
            let chat = app.provider.remote_chat(http.clone(), false)?;
            let inner = app.provider.remote_embedder(http)?;
            (Box::new(chat), Some(CachedEmbedder::with_sidecar(inner, &args.out.join(EMBEDDING_CACHE))?))
        }
    };
    let embedder: &dyn Embedder = match &cache {
        Some(c) => c,
        None => &offline,
    };
    log::info!("negotiating {} topic(s) with {} job(s)", topics.len(), args.jobs);

    let results = run_pool(&topics, args.jobs, |topic| {
        let r = negotiate_topic(topic, &profiles, &cfg, chat.as_ref(), embedder)
            .map_err(CliError::from)
            .and_then(|t| {
                let file = transcript_file_name(&topic.id);
                write_atomic(&transcripts_dir.join(&file), t.to_json()?.as_bytes())?;
                Ok((t, file))
            });
        match &r {
            Ok(_) => log::info!("{}: done", topic.id),
            Err(e) => log::error!("{}: {e}", topic.id),
        }
        r
    });

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for (topic, r) in topics.iter().zip(results) {
        match r {
            Ok((t, file)) => {
                let outcome = t.outcome.as_ref().expect("finished negotiations have an outcome");
                completed.push(Completed {
                    id: topic.id.clone(),
                    file: format!("{TRANSCRIPTS}/{file}"),
                    status: outcome.status,
                    rounds_played: outcome.rounds_played,
                });
            }
            Err(e) => failures.push(Failure {
                id: topic.id.clone(),
                kind: if matches!(e, CliError::Provider(_)) { "provider" } else { "validation" },
                error: e.to_string(),
            }),
        }
    }

    if let Some(c) = &cache {
        c.persist(&args.out.join(EMBEDDING_CACHE))?;
    }
    let code = if failures.iter().any(|f| f.kind == "provider") {
        EXIT_PROVIDER
    } else if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    };
    let manifest = Manifest {
        topics_file: args.topics.display().to_string(),
        cultures: &args.cultures,
        seed: args.seed,
        provider: &app.provider,
        game: &app.game,
        completed,
        failures,
    };
    write_atomic(&args.out.join(MANIFEST), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    println!(
        "{} completed, {} failed; manifest at {}",
        manifest.completed.len(),
        manifest.failures.len(),
        args.out.join(MANIFEST).display()
    );
    Ok(code)
}

/// Transcript files under `dir`, or under its transcripts subdirectory when
/// that exists, sorted by name.
pub fn transcript_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let nested = dir.join(TRANSCRIPTS);
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let entries = std::fs::read_dir(&dir).map_err(|e| CliError::validation(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_name().is_some_and(|n| n != MANIFEST && n != EMBEDDING_CACHE))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::validation(format!("no transcripts in {}", dir.display())));
    }
    Ok(files)
}
