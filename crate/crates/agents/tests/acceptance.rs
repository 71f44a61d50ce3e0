//! Release acceptance checks. Each criterion prints one PASS or FAIL line;
//! run with `--nocapture` to see them.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use accord_agents::chat::{ScriptKey, ScriptedChat};
use accord_agents::http::{HttpClient, HttpRequest, RetryPolicy};
use accord_agents::judge::{ChatJudge, ValueJudge, JUDGE_RETRIES};
use accord_agents::orchestrator::Negotiator;
use accord_agents::{AgentError, ProviderError};
use accord_core::embedding::{DeterministicEmbedder, Embedder};
use accord_core::ingest::{allocate_samples, AllocationRequest};
use accord_core::metrics::{
    acceptance_score, fairness_projection, hofstede_scores, pca_2d, perplexity_of,
    value_self_consistency_of, HofstedeConstants, VsmMeans,
};
use accord_core::solver::{smooth_weights, solve_equilibrium, SolverConfig};
use accord_core::transcript::GameStatus;
use accord_core::types::{Gid, GuidelineEmbedding, Side, UtilityConfig, UtilityMatrix, WeightDistribution};
use accord_core::utility::MetaGame;
use accord_core::verbalizer::{change_label, intensity_label, Intensity};
use common::{FakeTransport, RecordingSleeper, Scenario};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- games

type Payoff = Vec<Vec<f64>>;

fn values(a: &Payoff, b: &Payoff, x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut ua, mut ub) = (0.0, 0.0);
    for i in 0..x.len() {
        for j in 0..y.len() {
            ua += x[i] * y[j] * a[i][j];
            ub += x[i] * y[j] * b[i][j];
        }
    }
    (ua, ub)
}

fn gap(a: &Payoff, b: &Payoff, x: &[f64], y: &[f64]) -> f64 {
    let (ua, ub) = values(a, b, x, y);
    let best_a = (0..x.len())
        .map(|i| (0..y.len()).map(|j| a[i][j] * y[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let best_b = (0..y.len())
        .map(|j| (0..x.len()).map(|i| b[i][j] * x[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (best_a - ua).max(0.0) + (best_b - ub).max(0.0)
}

/// Support enumeration over equal-size supports with nalgebra LU solves.
fn support_enumeration(a: &Payoff, b: &Payoff) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (a.len(), a[0].len());
    let subsets = |size: usize, k: usize| -> Vec<Vec<usize>> {
        (0u32..1 << size)
            .filter(|s| s.count_ones() as usize == k)
            .map(|s| (0..size).filter(|i| s >> i & 1 == 1).collect())
            .collect()
    };
    let indifferent = |rows: &[usize], cols: &[usize], pay: &dyn Fn(usize, usize) -> f64| {
        let k = rows.len();
        let mut lhs = DMatrix::<f64>::zeros(k + 1, k + 1);
        let mut rhs = DVector::<f64>::zeros(k + 1);
        for (r, &i) in rows.iter().enumerate() {
            for (c, &j) in cols.iter().enumerate() {
                lhs[(r, c)] = pay(i, j);
            }
            lhs[(r, k)] = -1.0;
            lhs[(k, r)] = 1.0;
        }
        rhs[k] = 1.0;
        let sol = lhs.lu().solve(&rhs)?;
        let p: Vec<f64> = (0..k).map(|c| sol[c]).collect();
        p.iter().all(|&v| v >= -1e-12).then_some(p)
    };
    let mut out = Vec::new();
    for k in 1..=n.min(m) {
        for sa in subsets(n, k) {
            for sb in subsets(m, k) {
                let Some(py) = indifferent(&sa, &sb, &|i, j| a[i][j]) else { continue };
                let Some(px) = indifferent(&sb, &sa, &|j, i| b[i][j]) else { continue };
                let mut x = vec![0.0; n];
                let mut y = vec![0.0; m];
                sa.iter().zip(&px).for_each(|(&i, &p)| x[i] = p.max(0.0));
                sb.iter().zip(&py).for_each(|(&j, &p)| y[j] = p.max(0.0));
                if gap(a, b, &x, &y) <= 1e-9 {
                    out.push((x, y));
                }
            }
        }
    }
    out
}

fn random_games(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Check {
    let mut compared = 0;
    for case in 0..count {
        let mut draw = || -> Payoff { (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect() };
        let (a, b) = (draw(), draw());
        let m = UtilityMatrix::from_payoffs(a.clone(), b.clone()).map_err(|e| e.to_string())?;
        let eq = solve_equilibrium(&m, &SolverConfig::default()).map_err(|e| e.to_string())?;
        let (x, y) = (eq.weights_a.values(), eq.weights_b.values());
        let g = gap(&a, &b, &x, &y);
        ensure(g <= 1e-3, || format!("{n}x{n} game {case}: exploitability {g:.2e}"))?;
        let nes = support_enumeration(&a, &b);
        let vals: Vec<(f64, f64)> = nes.iter().map(|(p, q)| values(&a, &b, p, q)).collect();
        let unique = vals.first().filter(|f| vals.iter().all(|v| (v.0 - f.0).abs() <= 1e-9 && (v.1 - f.1).abs() <= 1e-9));
        if let Some(&(oa, ob)) = unique {
            let (sa, sb) = values(&a, &b, &x, &y);
            ensure((sa - oa).abs() <= 1e-3 && (sb - ob).abs() <= 1e-3, || {
                format!("{n}x{n} game {case}: utilities ({sa:.5}, {sb:.5}) vs oracle ({oa:.5}, {ob:.5})")
            })?;
            compared += 1;
        }
    }
    ensure(compared > 0, || format!("no {n}x{n} instance had unique equilibrium payoffs"))
}

fn equilibrium_correctness() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    random_games(&mut rng, 2, 50)?;
    random_games(&mut rng, 3, 25)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs <= 10.0, || format!("took {secs:.1} s"))
}

fn rps_sanity() -> Check {
    let a = vec![vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]];
    let b: Payoff = a.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let m = UtilityMatrix::from_payoffs(a, b).map_err(|e| e.to_string())?;
    let eq = solve_equilibrium(&m, &SolverConfig::default()).map_err(|e| e.to_string())?;
    for p in eq.weights_a.values().into_iter().chain(eq.weights_b.values()) {
        ensure((p - 1.0 / 3.0).abs() <= 1e-3, || format!("coordinate {p}"))?;
    }
    Ok(())
}

// -------------------------------------------------------------- utility

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = dot(&v, &v).sqrt();
    v.iter().map(|x| x / n).collect()
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Consistency to the normalized initial centroid, expected similarity to
/// the opponent, one minus the nearest predecessor (1 for initial ones).
fn direct_utility(own: &[Vec<f64>], j: usize, initial: usize, opp: &[Vec<f64>], w: &[f64]) -> f64 {
    let mut anchor = vec![0.0; own[0].len()];
    for v in &own[..initial] {
        anchor.iter_mut().zip(v).for_each(|(a, x)| *a += x);
    }
    let n = dot(&anchor, &anchor).sqrt();
    let cons = dot(&own[j], &anchor) / n;
    let acc: f64 = opp.iter().zip(w).map(|(o, p)| p * dot(&own[j], o)).sum();
    let nov = if j < initial {
        1.0
    } else {
        1.0 - own[..j].iter().map(|h| dot(&own[j], h)).fold(f64::NEG_INFINITY, f64::max)
    };
    (5.0 * cons + 5.0 * acc + 2.0 * nov) / 12.0
}

fn utility_fidelity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let emb = |c: &str, i: usize, v: &Vec<f64>| GuidelineEmbedding::new(Gid::new(c, i as u32), v.clone(), format!("{c}{i}")).unwrap();
    for fixture in 0..20 {
        let (ia, ib) = (rng.random_range(1..4usize), rng.random_range(1..4usize));
        let (xa, xb) = (rng.random_range(0..3usize), rng.random_range(0..3usize));
        let va: Vec<Vec<f64>> = (0..ia + xa).map(|_| unit(&mut rng, 12)).collect();
        let vb: Vec<Vec<f64>> = (0..ib + xb).map(|_| unit(&mut rng, 12)).collect();
        let ea: Vec<_> = va.iter().enumerate().map(|(i, v)| emb("a", i, v)).collect();
        let eb: Vec<_> = vb.iter().enumerate().map(|(i, v)| emb("b", i, v)).collect();
        let mut game = MetaGame::new(UtilityConfig::default(), &ea[..ia], &eb[..ib]).map_err(|e| e.to_string())?;
        for e in &ea[ia..] {
            game.add_guideline(Side::A, e.clone()).map_err(|e| e.to_string())?;
        }
        for e in &eb[ib..] {
            game.add_guideline(Side::B, e.clone()).map_err(|e| e.to_string())?;
        }
        let (wa, wb) = (simplex(&mut rng, va.len()), simplex(&mut rng, vb.len()));
        let m = game.matrix();
        for j in 0..va.len() {
            let via_matrix: f64 = (0..vb.len()).map(|k| wb[k] * m.a(j, k)).sum();
            let direct = direct_utility(&va, j, ia, &vb, &wb);
            ensure((via_matrix - direct).abs() <= 1e-9, || format!("fixture {fixture} row {j}: {via_matrix} vs {direct}"))?;
        }
        for k in 0..vb.len() {
            let via_matrix: f64 = (0..va.len()).map(|j| wa[j] * m.b(j, k)).sum();
            let direct = direct_utility(&vb, k, ib, &va, &wa);
            ensure((via_matrix - direct).abs() <= 1e-9, || format!("fixture {fixture} col {k}: {via_matrix} vs {direct}"))?;
        }
    }
    let v = DeterministicEmbedder.embed("Share the harvest with the village.").map_err(|e| e.to_string())?;
    let same = |c: &str| GuidelineEmbedding::new(Gid::new(c, 0), v.clone(), "same").unwrap();
    let game = MetaGame::new(UtilityConfig::default(), &[same("a")], &[same("b")]).map_err(|e| e.to_string())?;
    let (ua, ub) = (game.matrix().a(0, 0), game.matrix().b(0, 0));
    ensure(ua == 1.0 && ub == 1.0, || format!("identical texts gave ({ua}, {ub})"))
}

fn smoothing_algebra() -> Check {
    let gids = [Gid::new("a", 0), Gid::new("a", 1)];
    let forced = WeightDistribution::from_parts(&gids, &[1.0, 0.0]).map_err(|e| e.to_string())?;
    for (gamma, want) in [(0.0, [1.0, 0.0]), (0.5, [0.75, 0.25]), (1.0, [0.5, 0.5])] {
        let got = smooth_weights(&forced, gamma).map_err(|e| e.to_string())?.values();
        ensure(got == want, || format!("gamma {gamma}: {got:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    for case in 0..200 {
        let n = rng.random_range(1..6usize);
        let gids: Vec<Gid> = (0..n).map(|i| Gid::new("a", i as u32)).collect();
        let w = WeightDistribution::from_parts(&gids, &simplex(&mut rng, n)).map_err(|e| e.to_string())?;
        let (g1, g2) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let twice = smooth_weights(&smooth_weights(&w, g1).unwrap(), g2).unwrap().values();
        let once = smooth_weights(&w, 1.0 - (1.0 - g1) * (1.0 - g2)).unwrap().values();
        for (x, y) in twice.iter().zip(&once) {
            ensure((x - y).abs() <= 1e-12, || format!("case {case}: {x} vs {y}"))?;
        }
        for gamma in [0.0, 0.5, 1.0] {
            let s = smooth_weights(&w, gamma).unwrap().values();
            for (si, wi) in s.iter().zip(w.values()) {
                let want = gamma / n as f64 + (1.0 - gamma) * wi;
                ensure((si - want).abs() <= 1e-12, || format!("case {case} gamma {gamma}: {si} vs {want}"))?;
            }
        }
    }
    Ok(())
}

// ----------------------------------------------------------------- loop

fn psro_loop_contract() -> Check {
    let s = Scenario::load("career_two_rounds");
    let first = common::play(&s, common::two_round_config());
    let second = common::play(&s, common::two_round_config());
    let (j1, j2) = (first.transcript.to_json().unwrap(), second.transcript.to_json().unwrap());
    ensure(j1 == j2, || "two runs produced different transcripts".into())?;
    ensure(common::golden("career_two_rounds.json", &j1), || "transcript differs from the golden file".into())?;

    let t = &first.transcript;
    let mut counts = vec![(t.initial_guidelines.a.len(), t.initial_guidelines.b.len())];
    counts.extend(t.rounds.iter().map(|r| (r.guideline_counts.a, r.guideline_counts.b)));
    ensure(counts == [(1, 1), (2, 2), (3, 3)], || format!("trajectory {counts:?}"))?;

    // termination: no round with both rejecting may be followed by another,
    // and a both-reject round must end the game as converged
    let stalemate = common::play(&Scenario::load("career_stalemate"), common::config(UtilityConfig::default(), 8));
    for n in [&first, &stalemate] {
        let t = &n.transcript;
        for (i, r) in t.rounds.iter().enumerate() {
            let both_reject = Side::BOTH.iter().all(|&s| r.cultures.get(s).proposal.delta_u < t.settings.utility.epsilon());
            let last = i + 1 == t.rounds.len();
            ensure(!both_reject || last, || format!("play continued after round {}", r.round))?;
            if last {
                let status = t.outcome.as_ref().map(|o| o.status);
                let want = if both_reject { GameStatus::Converged } else { GameStatus::MaxRoundsReached };
                ensure(status == Some(want), || format!("round {} ended with {status:?}", r.round))?;
            }
        }
    }
    let t = &stalemate.transcript;
    ensure(t.rounds.len() == 1, || format!("stalemate ran {} rounds", t.rounds.len()))?;
    ensure(t.outcome.as_ref().map(|o| &o.weights) == Some(&t.rounds[0].interim_weights), || {
        "final weights differ from the round-1 interim weights".into()
    })
}

// ---------------------------------------------------- speech and metrics

fn verbalizer_labels() -> Check {
    let want = [
        (0.45, Intensity::High),
        (0.30, Intensity::Moderate),
        (0.15, Intensity::Low),
        (0.10, Intensity::ExtremelyLow),
    ];
    for (w, label) in want {
        let got = intensity_label(w).map_err(|e| e.to_string())?;
        ensure(got == label, || format!("{w} labelled {got}"))?;
    }
    let change = change_label(Some(1.0), 0.75).to_string();
    ensure(change == "significantly decreased", || format!("1.00 to 0.75 labelled {change:?}"))
}

fn metric_closed_forms() -> Check {
    let ppl = perplexity_of(&[-std::f64::consts::LN_2; 7]).map_err(|e| e.to_string())?;
    ensure(ppl == 2.0, || format!("perplexity {ppl}"))?;
    let v0 = [1, 0, -1, 1, 0, 0, 1, -1, 0, 1];
    let mut v1 = v0;
    v1[0] = -1;
    v1[4] = 1;
    v1[9] = 0;
    let vsc = value_self_consistency_of(&v0, &v1).map_err(|e| e.to_string())?;
    ensure(vsc == 0.7, || format!("VSC {vsc}"))?;
    let acc = acceptance_score(&[0.2, 1.5]).map_err(|e| e.to_string())?;
    ensure(acc == 0.5, || format!("acceptance score {acc}"))?;
    let means = VsmMeans::constant(3.0).map_err(|e| e.to_string())?;
    let h = hofstede_scores(&means, &HofstedeConstants::default()).as_array();
    ensure(h == [0.0, 43.0, 60.0, 100.0, -25.0, -15.0], || format!("Hofstede {h:?}"))
}

fn allocation() -> Check {
    let forced = allocate_samples(&AllocationRequest::new(vec![0.5, 0.3, 0.2], 10).unwrap()).map_err(|e| e.to_string())?;
    ensure(forced == [5, 3, 2], || format!("forced case {forced:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    for case in 0..1000 {
        let n = rng.random_range(1..12usize);
        let shares = simplex(&mut rng, n);
        let k = rng.random_range(0..5000u64);
        let c = allocate_samples(&AllocationRequest::new(shares.clone(), k).unwrap()).map_err(|e| e.to_string())?;
        let total: u64 = c.iter().sum();
        ensure(total == k, || format!("case {case}: sum {total} for K={k}"))?;
        for (ci, si) in c.iter().zip(&shares) {
            let dev = (*ci as f64 - si * k as f64).abs();
            ensure(dev <= 1.0, || format!("case {case}: deviation {dev}"))?;
        }
    }
    Ok(())
}

/// Top two covariance eigenvectors, signed so the first non-negligible entry
/// is positive, and the centred projections on them.
fn eigen_projection(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let (n, d) = (points.len(), points[0].len());
    let x = DMatrix::from_fn(n, d, |i, j| points[i][j]);
    let mean = x.row_mean();
    let c = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let eig = SymmetricEigen::new(c.transpose() * &c / (n as f64 - 1.0));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].partial_cmp(&eig.eigenvalues[p]).unwrap());
    let axes: Vec<Vec<f64>> = order[..2]
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let big = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            if v.iter().find(|a| a.abs() > big * 1e-9).is_some_and(|a| *a < 0.0) {
                v.iter_mut().for_each(|a| *a = -*a);
            }
            v
        })
        .collect();
    (0..n)
        .map(|i| {
            let p = |v: &Vec<f64>| (0..d).map(|j| c[(i, j)] * v[j]).sum::<f64>();
            [p(&axes[0]), p(&axes[1])]
        })
        .collect()
}

fn fairness_geometry() -> Check {
    let (a, b) = (vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]);
    let f = fairness_projection(&[vec![0.5, 0.5, 0.3]], &a, &b).map_err(|e| e.to_string())?;
    let d = f.records[0].distance_to_diagonal;
    ensure(d == 0.0, || format!("equidistant point at distance {d}"))?;
    let fixtures = [
        vec![vec![1.0, 2.0, 0.5, -1.0], vec![0.3, -0.7, 2.2, 0.0], vec![-1.1, 0.4, 0.9, 1.5], vec![0.2, 0.2, 0.2, 0.9]],
        vec![vec![0.9, 0.1, 0.0], vec![0.1, 0.8, 0.3], vec![0.4, 0.4, 0.7], vec![0.0, 0.3, 0.1], vec![0.6, 0.6, 0.6]],
        vec![vec![3.0, -2.0, 1.0, 0.5, 0.0, 1.0], vec![-1.0, 0.5, 0.25, 2.0, 1.0, 0.0], vec![0.0, 1.0, -3.0, 1.0, 0.5, 0.5]],
    ];
    for (i, pts) in fixtures.iter().enumerate() {
        let ours = pca_2d(pts).map_err(|e| e.to_string())?;
        for (got, want) in ours.coords.iter().zip(eigen_projection(pts)) {
            ensure((got[0] - want[0]).abs() <= 1e-6 && (got[1] - want[1]).abs() <= 1e-6, || {
                format!("fixture {i}: {got:?} vs {want:?}")
            })?;
        }
    }
    Ok(())
}

// ------------------------------------------------------------- providers

fn provider_robustness() -> Check {
    let client = |t: Arc<FakeTransport>| {
        HttpClient::new(t, RetryPolicy::default(), 4).with_sleeper(Arc::new(RecordingSleeper::default()))
    };
    let req = HttpRequest { url: "http://fake/v1/embeddings".into(), headers: Vec::new(), body: "{}".into() };
    let max = RetryPolicy::default().max_attempts;

    let storm = FakeTransport::new(&[], 429);
    let err = client(storm.clone()).post(&req).unwrap_err();
    ensure(err == ProviderError::RateLimited { attempts: max }, || format!("429 storm gave {err:?}"))?;
    ensure(storm.calls() == max, || format!("429 storm made {} calls", storm.calls()))?;
    let recovered = client(FakeTransport::new(&[429, 429], 200)).post(&req).map_err(|e| e.to_string())?;
    ensure(recovered.attempts == 3, || format!("recovered after {} attempts", recovered.attempts))?;

    let chat = ScriptedChat::new([]);
    for _ in 0..5 {
        chat.push(ScriptKey::new("judge", 0, "judge"), "no idea");
    }
    let err = ChatJudge::new(&chat).judge_value_vector("text");
    ensure(matches!(err, Err(ProviderError::Judging { attempts, .. }) if attempts == JUDGE_RETRIES + 1), || {
        format!("malformed judge output gave {err:?}")
    })?;
    ensure(chat.remaining() == 5 - (JUDGE_RETRIES as usize + 1), || "judge retried without bound".into())?;

    // exhaustion mid-round rolls the whole round back
    let s = Scenario::load("career_two_rounds");
    let mut script = s.script.clone();
    script.retain(|e| e.key != ScriptKey::new("english_speaking", 2, "candidates:complementary"));
    let chat = ScriptedChat::new(script);
    let emb = DeterministicEmbedder::new();
    let neg = Negotiator::new(common::two_round_config(), &chat, &emb).map_err(|e| e.to_string())?;
    let mut n = s.start(&neg);
    neg.run_round(&mut n).map_err(|e| e.to_string())?;
    let (hash, transcript) = (n.state.state_hash(), n.transcript.clone());
    let err = neg.run_round(&mut n).unwrap_err();
    ensure(matches!(err, AgentError::Provider(ProviderError::ScriptExhausted(_))), || format!("exhaustion gave {err}"))?;
    ensure(n.state.state_hash() == hash && n.transcript == transcript, || "a failed round left state behind".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("equilibrium correctness", equilibrium_correctness),
        ("rock-paper-scissors sanity", rps_sanity),
        ("utility fidelity", utility_fidelity),
        ("smoothing algebra", smoothing_algebra),
        ("negotiation loop contract", psro_loop_contract),
        ("verbalizer labels", verbalizer_labels),
        ("metric closed forms", metric_closed_forms),
        ("sample allocation", allocation),
        ("fairness geometry", fairness_geometry),
        ("provider robustness", provider_robustness),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(()) => println!("PASS {:>2} {name}", i + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
