//! Scores finished transcripts: perplexity acceptance, value
//! self-consistency and the fairness geometry of each consensus.

use accord_agents::config::ProviderMode;
use accord_agents::judge::{ChatJudge, ScriptedJudge, ValueJudge};
use accord_agents::logprobs::{BigramModel, LogProbProvider};
use accord_agents::prompts::culture_profile;
use accord_core::embedding::{normalize, DeterministicEmbedder, Embedder};
use accord_core::error::Error as CoreError;
use accord_core::io::write_atomic;
use accord_core::metrics::{
    fairness_projection, metrics_csv, pca_2d, perplexity, ppl_acceptance, summarize, value_self_consistency,
    PplPair, PplStage, TopicMetrics,
};
use accord_core::transcript::NegotiationTranscript;
use accord_core::types::{Guideline, Side};

use crate::args::MetricsArgs;
use crate::error::{CliError, Result, EXIT_OK};
use crate::negotiate::transcript_files;
use crate::tools::{print_json, read_text};

const CSV_FILE: &str = "metrics.csv";
const SUMMARY_FILE: &str = "summary.json";

struct Services<'a> {
    judge: &'a dyn ValueJudge,
    embedder: &'a dyn Embedder,
    /// Remote scorer shared by both cultures; bigram models are fit per
    /// transcript when absent.
    scorer: Option<&'a dyn LogProbProvider>,
}

/// Initial guidelines plus every admitted proposal, for one side.
fn admitted(t: &NegotiationTranscript, side: Side) -> Vec<&Guideline> {
    t.initial_guidelines
        .get(side)
        .iter()
        .chain(
            t.rounds
                .iter()
                .map(|r| &r.cultures.get(side).proposal)
                .filter(|p| p.accepted)
                .map(|p| &p.guideline),
        )
        .collect()
}

fn embed(e: &dyn Embedder, text: &str) -> Result<Vec<f64>> {
    e.embed(text).map_err(|e| CliError::from(accord_agents::AgentError::from(e)))
}

fn add_scaled(acc: &mut [f64], v: &[f64], w: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += w * x;
    }
}

/// Unit centroid of a culture's opening guidelines.
fn anchor(t: &NegotiationTranscript, side: Side, e: &dyn Embedder) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; e.dimension()];
    for g in t.initial_guidelines.get(side) {
        add_scaled(&mut acc, &embed(e, &g.embedding_text())?, 1.0);
    }
    normalize(&mut acc)?;
    Ok(acc)
}

/// Unit vector of both cultures' guidelines weighted by the final
/// distributions.
fn consensus(t: &NegotiationTranscript, e: &dyn Embedder) -> Result<Vec<f64>> {
    let outcome = t.outcome.as_ref().ok_or_else(|| incomplete(t, "no outcome"))?;
    let mut acc = vec![0.0; e.dimension()];
    for side in Side::BOTH {
        let pool = admitted(t, side);
        for (gid, w) in outcome.weights.get(side).entries() {
            let g = pool
                .iter()
                .find(|g| &g.gid == gid)
                .ok_or_else(|| incomplete(t, &format!("final weights name unknown guideline {gid}")))?;
            add_scaled(&mut acc, &embed(e, &g.embedding_text())?, *w);
        }
    }
    normalize(&mut acc)?;
    Ok(acc)
}

fn incomplete(t: &NegotiationTranscript, why: &str) -> CliError {
    CoreError::IncompleteTranscript(format!("{}: {why}", t.topic.id)).into()
}

fn response<'t>(t: &NegotiationTranscript, o: &'t Option<String>, what: &str) -> Result<&'t str> {
    o.as_deref().ok_or_else(|| incomplete(t, what))
}

fn responses(t: &NegotiationTranscript) -> Result<[[&str; 2]; 2]> {
    Ok([
        [
            response(t, &t.initial_responses.a, "no initial response for A")?,
            response(t, &t.initial_responses.b, "no initial response for B")?,
        ],
        [
            response(t, &t.final_responses.a, "no final response for A")?,
            response(t, &t.final_responses.b, "no final response for B")?,
        ],
    ])
}

/// Corpus of the offline scorer: the culture profile and its opening
/// guidelines.
fn bigram_for(t: &NegotiationTranscript, side: Side) -> Result<BigramModel> {
    let mut corpus = culture_profile(&t.cultures.get(side).id).profile;
    for g in t.initial_guidelines.get(side) {
        corpus.push(' ');
        corpus.push_str(&g.embedding_text());
    }
    Ok(BigramModel::fit(&corpus)?)
}

fn context(t: &NegotiationTranscript, side: Side) -> String {
    format!("{}\n{}", culture_profile(&t.cultures.get(side).id).profile, t.topic.question)
}

fn score_topic(t: &NegotiationTranscript, s: &Services) -> Result<(TopicMetrics, Vec<f64>)> {
    let [initial, last] = responses(t)?;
    let bigrams;
    let scorers: [&dyn LogProbProvider; 2] = match s.scorer {
        Some(r) => [r, r],
        None => {
            bigrams = [bigram_for(t, Side::A)?, bigram_for(t, Side::B)?];
            [&bigrams[0], &bigrams[1]]
        }
    };
    let ctx = [context(t, Side::A), context(t, Side::B)];
    // each culture's model scores the other culture's response
    let ppl = |stage: PplStage, texts: [&str; 2]| -> Result<PplPair> {
        let a_of_b = perplexity(&scorers[0].score_logprobs(&ctx[0], texts[1])?)?;
        let b_of_a = perplexity(&scorers[1].score_logprobs(&ctx[1], texts[0])?)?;
        Ok(PplPair::new(a_of_b, b_of_a, stage)?)
    };
    let ratio = match ppl_acceptance(&ppl(PplStage::Initial, initial)?, &ppl(PplStage::Consensus, last)?) {
        Ok(r) => Some(r),
        Err(CoreError::DegenerateBaseline { gap, .. }) => {
            log::warn!("{}: initial perplexity gap {gap} is degenerate; ratio left empty", t.topic.id);
            None
        }
        Err(e) => return Err(e.into()),
    };
    let vsc = |i: usize| -> Result<f64> {
        Ok(value_self_consistency(
            &s.judge.judge_value_vector(initial[i])?,
            &s.judge.judge_value_vector(last[i])?,
        ))
    };
    let point = consensus(t, s.embedder)?;
    let anchor_a = anchor(t, Side::A, s.embedder)?;
    let anchor_b = anchor(t, Side::B, s.embedder)?;
    let f = fairness_projection(std::slice::from_ref(&point), &anchor_a, &anchor_b)?;
    let row = TopicMetrics {
        topic_id: t.topic.id.clone(),
        ratio,
        vsc_a: vsc(0)?,
        vsc_b: vsc(1)?,
        d_a: f.records[0].d_a,
        d_b: f.records[0].d_b,
        pca_x: None,
        pca_y: None,
    };
    Ok((row, point))
}

fn score_all(transcripts: &[NegotiationTranscript], s: &Services) -> Result<Vec<TopicMetrics>> {
    let mut rows = Vec::with_capacity(transcripts.len());
    let mut points = Vec::with_capacity(transcripts.len());
    for t in transcripts {
        let (row, point) = score_topic(t, s)?;
        rows.push(row);
        points.push(point);
    }
    if points.len() >= 2 {
        let pca = pca_2d(&points)?;
        for (row, [x, y]) in rows.iter_mut().zip(pca.coords) {
            row.pca_x = Some(x);
            row.pca_y = Some(y);
        }
    }
    Ok(rows)
}

pub fn run(args: &MetricsArgs) -> Result<i32> {
    let app = args.provider.load()?;
    let transcripts = transcript_files(&args.transcripts)?
        .iter()
        .map(|p| {
            NegotiationTranscript::from_json(&read_text(p)?)
                .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = match app.provider.mode {
        ProviderMode::Scripted => {
            let path = args
                .stances
                .as_ref()
                .ok_or_else(|| CliError::Usage("--stances is required with the scripted provider".into()))?;
            let judge = ScriptedJudge::from_json(&read_text(path)?)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            let embedder = DeterministicEmbedder::new();
            score_all(&transcripts, &Services { judge: &judge, embedder: &embedder, scorer: None })?
        }
        ProviderMode::Remote => {
            if !app.provider.supports_logprobs {
                return Err(CliError::validation(
                    "the remote provider must support log-probabilities (set supports_logprobs)",
                ));
            }
            let http = app.provider.http_client()?;
            let judge = ChatJudge::new(app.provider.remote_chat(http.clone(), true)?);
            let scorer = app.provider.remote_chat(http.clone(), false)?;
            let embedder = app.provider.remote_embedder(http)?;
            score_all(&transcripts, &Services { judge: &judge, embedder: &embedder, scorer: Some(&scorer) })?
        }
    };

    let summary = summarize(&rows)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::validation(format!("{}: {e}", args.out.display())))?;
    write_atomic(&args.out.join(CSV_FILE), metrics_csv(&rows)?.as_bytes())?;
    write_atomic(&args.out.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    print_json(&summary)?;
    Ok(EXIT_OK)
}
