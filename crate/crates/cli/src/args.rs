use std::path::PathBuf;

use accord_agents::config::{AppConfig, GameSettings, ProviderMode};
use accord_core::ingest::TopicCategory;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "accord", version, about = "Cross-cultural guideline negotiation toolkit")]
pub struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run negotiations for a set of topics.
    Negotiate(NegotiateArgs),
    /// Solve a two-player general-sum matrix game.
    Solve(SolveArgs),
    /// Describe a weighted guideline set in words.
    Verbalize(VerbalizeArgs),
    /// Score negotiation transcripts.
    Metrics(MetricsArgs),
    /// Hofstede indices from 24 questionnaire item means.
    Hofstede(HofstedeArgs),
    /// Split a sample target across strata proportionally.
    Allocate(AllocateArgs),
    /// Export chosen/rejected pairs from a transcript as JSON lines.
    ExportPairs(ExportPairsArgs),
    /// Check a topic file and report rejected records.
    ValidateTopics(ValidateTopicsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Scripted,
    Remote,
}

impl From<ProviderArg> for ProviderMode {
    fn from(p: ProviderArg) -> Self {
        match p {
            ProviderArg::Scripted => ProviderMode::Scripted,
            ProviderArg::Remote => ProviderMode::Remote,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProviderFlags {
    /// TOML configuration file. Environment variables override it and flags
    /// override both.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub provider: Option<ProviderArg>,
}

impl ProviderFlags {
    pub fn load(&self) -> Result<AppConfig> {
        let mut cfg = match &self.config {
            Some(p) => AppConfig::load(p)?,
            None => AppConfig::default(),
        };
        cfg.apply_process_env()?;
        if let Some(p) = self.provider {
            cfg.provider.mode = p.into();
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct GameFlags {
    #[arg(long)]
    pub max_rounds: Option<u32>,
    /// Weight of self-consistency in the utility.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of acceptance by the other culture.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Weight of novelty.
    #[arg(long)]
    pub gamma_nov: Option<f64>,
    /// Minimum utility gain for a proposal to be admitted.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Solver step size.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Share of the uniform distribution mixed into each solved weight vector.
    #[arg(long)]
    pub smoothing_gamma: Option<f64>,
}

impl GameFlags {
    pub fn apply(&self, g: &mut GameSettings) {
        if let Some(v) = self.max_rounds {
            g.max_rounds = v;
        }
        for (flag, slot) in [
            (self.alpha, &mut g.alpha),
            (self.beta, &mut g.beta),
            (self.gamma_nov, &mut g.gamma_nov),
            (self.epsilon, &mut g.epsilon),
            (self.eta, &mut g.eta),
            (self.smoothing_gamma, &mut g.smoothing_gamma),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
    }
}

fn parse_category(s: &str) -> std::result::Result<TopicCategory, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned()))
        .map_err(|_| format!("unknown category {s:?}"))
}

#[derive(Debug, Args)]
pub struct NegotiateArgs {
    /// JSON topic file.
    #[arg(long)]
    pub topics: PathBuf,
    /// Only these topic ids (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub ids: Vec<String>,
    /// Only topics in this category, by snake_case id or display name.
    #[arg(long, value_parser = parse_category)]
    pub category: Option<TopicCategory>,
    /// The two culture ids, A first.
    #[arg(long, value_delimiter = ',', default_value = "english_speaking,confucian")]
    pub cultures: Vec<String>,
    /// Output directory for transcripts and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed of the offline chat stand-in.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Topics negotiated concurrently.
    #[arg(long, default_value_t = 4)]
    pub jobs: usize,
    #[command(flatten)]
    pub provider: ProviderFlags,
    #[command(flatten)]
    pub game: GameFlags,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// JSON object `{"payoff_a": [[..]], "payoff_b": [[..]]}`.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerbalizeArgs {
    /// JSON array of `{content, weight, previous?, reason?, description?}`.
    #[arg(long)]
    pub weights: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// A negotiate output directory, or a directory of transcript files.
    #[arg(long)]
    pub transcripts: PathBuf,
    /// Where metrics.csv and summary.json are written.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON object mapping response text to a stance vector such as
    /// "+1 0 -1 0 0 0 0 0 0 0". Required with the scripted provider.
    #[arg(long)]
    pub stances: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderFlags,
}

#[derive(Debug, Args)]
pub struct HofstedeArgs {
    /// JSON array of the 24 item means, item 1 first.
    #[arg(long)]
    pub means: PathBuf,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Stratum shares (comma separated, non-negative).
    #[arg(long, value_delimiter = ',', required = true)]
    pub shares: Vec<f64>,
    /// Total number of samples.
    #[arg(long)]
    pub target: u64,
}

#[derive(Debug, Args)]
pub struct ExportPairsArgs {
    #[arg(long)]
    pub transcript: PathBuf,
    /// JSON lines output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateTopicsArgs {
    pub file: PathBuf,
}
