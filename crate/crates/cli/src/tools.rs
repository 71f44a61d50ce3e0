//! Single-shot subcommands over JSON inputs.

use std::io::Write;
use std::path::Path;

use accord_core::ingest::{allocate_samples, export_preference_pairs, load_topics, preference_pairs_jsonl, AllocationRequest};
use accord_core::metrics::{hofstede_scores, HofstedeConstants, VsmMeans};
use accord_core::solver::{solve_equilibrium, SolverConfig};
use accord_core::transcript::NegotiationTranscript;
use accord_core::types::{Gid, Guideline, GuidelineDraft, UtilityMatrix, WeightDistribution};
use accord_core::verbalizer::Verbalizer;
use serde::{Deserialize, Serialize};

use crate::args::{AllocateArgs, ExportPairsArgs, HofstedeArgs, SolveArgs, ValidateTopicsArgs, VerbalizeArgs};
use crate::error::{CliError, Result, EXIT_OK, EXIT_VALIDATION};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    payoff_a: Vec<Vec<f64>>,
    payoff_b: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SolveOutput {
    weights_a: Vec<f64>,
    weights_b: Vec<f64>,
    exploitability: f64,
    converged: bool,
    iterations: usize,
}

pub fn solve(args: &SolveArgs) -> Result<i32> {
    let file: MatrixFile = read_json(&args.matrix)?;
    let m = UtilityMatrix::from_payoffs(file.payoff_a, file.payoff_b)?;
    let mut cfg = SolverConfig::<f64>::default();
    if let Some(v) = args.eta {
        cfg.eta = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.tolerance {
        cfg.tolerance = v;
    }
    let eq = solve_equilibrium(&m, &cfg)?;
    print_json(&SolveOutput {
        weights_a: eq.weights_a.values(),
        weights_b: eq.weights_b.values(),
        exploitability: eq.exploitability,
        converged: eq.status.converged(),
        iterations: eq.status.iterations(),
    })?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedEntry {
    content: String,
    weight: f64,
    previous: Option<f64>,
    reason: Option<String>,
    description: Option<String>,
}

pub fn verbalize(args: &VerbalizeArgs) -> Result<i32> {
    let entries: Vec<WeightedEntry> = read_json(&args.weights)?;
    if entries.is_empty() {
        return Err(CliError::validation("no guidelines to describe"));
    }
    let mut guidelines = Vec::with_capacity(entries.len());
    let mut weights = Vec::with_capacity(entries.len());
    let mut prev = Vec::new();
    for (i, e) in entries.iter().enumerate() {
        let gid = Gid::new("g", i as u32);
        let draft = GuidelineDraft::new(
            e.content.as_str(),
            e.reason.as_deref().unwrap_or(&e.content),
            e.description.as_deref().unwrap_or(&e.content),
        )?;
        guidelines.push(Guideline::from_draft(gid.clone(), draft, 0)?);
        weights.push((gid.clone(), e.weight));
        if let Some(p) = e.previous {
            prev.push((gid, p));
        }
    }
    let weights = WeightDistribution::new(weights)?;
    let prev = if prev.is_empty() { None } else { Some(WeightDistribution::new(prev)?) };
    println!("{}", Verbalizer::default().render(&guidelines, &weights, prev.as_ref())?);
    Ok(EXIT_OK)
}

pub fn hofstede(args: &HofstedeArgs) -> Result<i32> {
    let raw: Vec<f64> = read_json(&args.means)?;
    let means: [f64; 24] = raw
        .try_into()
        .map_err(|v: Vec<f64>| CliError::validation(format!("expected 24 item means, got {}", v.len())))?;
    let scores = hofstede_scores(&VsmMeans::new(means)?, &HofstedeConstants::default());
    print_json(&scores)?;
    Ok(EXIT_OK)
}

pub fn allocate(args: &AllocateArgs) -> Result<i32> {
    let counts = allocate_samples(&AllocationRequest::new(args.shares.clone(), args.target)?)?;
    print_json(&counts)?;
    Ok(EXIT_OK)
}

pub fn export_pairs(args: &ExportPairsArgs) -> Result<i32> {
    let t = NegotiationTranscript::from_json(&read_text(&args.transcript)?)?;
    let jsonl = preference_pairs_jsonl(&export_preference_pairs(&t)?)?;
    match &args.out {
        Some(p) => accord_core::io::write_atomic(p, jsonl.as_bytes())?,
        None => std::io::stdout()
            .write_all(jsonl.as_bytes())
            .map_err(|e| CliError::validation(e.to_string()))?,
    }
    Ok(EXIT_OK)
}

pub fn validate_topics(args: &ValidateTopicsArgs) -> Result<i32> {
    let load = load_topics(&args.file)?;
    for d in &load.diagnostics {
        println!("{d}");
    }
    println!("{} valid, {} rejected", load.topics.len(), load.diagnostics.len());
    Ok(if load.diagnostics.is_empty() { EXIT_OK } else { EXIT_VALIDATION })
}
