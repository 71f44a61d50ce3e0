use accord_core::embedding::{DeterministicEmbedder, Embedder};
use accord_core::types::{Gid, GuidelineEmbedding, Side, UtilityConfig, WeightDistribution};
use accord_core::utility::{acceptance, build_utility_matrix, utility, MetaGame, SideInput};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 16;

fn unit_vector(rng: &mut ChaCha8Rng, nonneg: bool) -> Vec<f64> {
    let lo = if nonneg { 0.0 } else { -1.0 };
    let v: Vec<f64> = (0..DIM).map(|_| rng.random_range(lo..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn emb(culture: &str, i: u32, v: Vec<f64>) -> GuidelineEmbedding<f64> {
    GuidelineEmbedding::new(Gid::new(culture, i), v, format!("{culture}{i}")).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn centroid(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut c = vec![0.0; vs[0].len()];
    for v in vs {
        for (ci, x) in c.iter_mut().zip(v) {
            *ci += x;
        }
    }
    let n = dot(&c, &c).sqrt();
    c.iter().map(|x| x / n).collect()
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Scalar recomputation of one guideline's utility: anchor consistency,
/// expected similarity to the opponent, one minus the nearest predecessor.
fn hand_utility(
    own: &[Vec<f64>],
    j: usize,
    initial: usize,
    opp: &[Vec<f64>],
    w: &[f64],
    cfg: (f64, f64, f64),
) -> f64 {
    let anchor = centroid(&own[..initial]);
    let cons = dot(&own[j], &anchor);
    let acc: f64 = opp.iter().zip(w).map(|(o, p)| p * dot(&own[j], o)).sum();
    let nov = if j < initial {
        1.0
    } else {
        1.0 - own[..j].iter().map(|h| dot(&own[j], h)).fold(f64::NEG_INFINITY, f64::max)
    };
    cfg.0 * cons + cfg.1 * acc + cfg.2 * nov
}

#[test]
fn expectation_identity_on_random_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = UtilityConfig::default();
    let norm = (cfg.alpha(), cfg.beta(), cfg.gamma_nov());
    for fixture in 0..20 {
        let (ia, ib) = (rng.random_range(1..4usize), rng.random_range(1..4usize));
        let (xa, xb) = (rng.random_range(0..3usize), rng.random_range(0..3usize));
        let va: Vec<Vec<f64>> = (0..ia + xa).map(|_| unit_vector(&mut rng, false)).collect();
        let vb: Vec<Vec<f64>> = (0..ib + xb).map(|_| unit_vector(&mut rng, false)).collect();
        let ea: Vec<_> = va.iter().enumerate().map(|(i, v)| emb("a", i as u32, v.clone())).collect();
        let eb: Vec<_> = vb.iter().enumerate().map(|(i, v)| emb("b", i as u32, v.clone())).collect();

        let mut game = MetaGame::new(cfg, &ea[..ia], &eb[..ib]).unwrap();
        for e in &ea[ia..] {
            game.add_guideline(Side::A, e.clone()).unwrap();
        }
        for e in &eb[ib..] {
            game.add_guideline(Side::B, e.clone()).unwrap();
        }
        let wa = random_weights(&mut rng, va.len());
        let wb = random_weights(&mut rng, vb.len());
        let dist_a = WeightDistribution::from_parts(&game.gids(Side::A), &wa).unwrap();
        let dist_b = WeightDistribution::from_parts(&game.gids(Side::B), &wb).unwrap();

        let from_matrix_a = game.expected_utilities(Side::A, &dist_b).unwrap();
        let from_matrix_b = game.expected_utilities(Side::B, &dist_a).unwrap();
        for j in 0..va.len() {
            let direct = hand_utility(&va, j, ia, &vb, &wb, norm);
            assert!((from_matrix_a[j] - direct).abs() <= 1e-9, "fixture {fixture} row {j}");
            let explicit: f64 = (0..vb.len()).map(|k| wb[k] * game.matrix().a(j, k)).sum();
            assert!((explicit - direct).abs() <= 1e-9);
        }
        for k in 0..vb.len() {
            let direct = hand_utility(&vb, k, ib, &va, &wa, norm);
            assert!((from_matrix_b[k] - direct).abs() <= 1e-9, "fixture {fixture} col {k}");
        }
    }
}

#[test]
fn library_utility_matches_hand_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cfg = UtilityConfig::default();
    let norm = (cfg.alpha(), cfg.beta(), cfg.gamma_nov());
    for _ in 0..20 {
        let own: Vec<Vec<f64>> = (0..3).map(|_| unit_vector(&mut rng, false)).collect();
        let opp: Vec<Vec<f64>> = (0..3).map(|_| unit_vector(&mut rng, false)).collect();
        let w = random_weights(&mut rng, 3);
        let opp_e: Vec<_> = opp.iter().enumerate().map(|(i, v)| emb("b", i as u32, v.clone())).collect();
        let dist = WeightDistribution::from_parts(&opp_e.iter().map(|e| e.gid.clone()).collect::<Vec<_>>(), &w).unwrap();
        let cand = emb("a", 2, own[2].clone());
        let anchor = emb("a", 0, own[0].clone());
        let hist = vec![emb("a", 0, own[0].clone()), emb("a", 1, own[1].clone())];
        let got = utility(&cand, &anchor, &hist, &opp_e, &dist, &cfg).unwrap();
        assert!((got - hand_utility(&own, 2, 1, &opp, &w, norm)).abs() <= 1e-12);
    }
}

#[test]
fn two_by_two_deterministic_entries_match_scalar_recomputation() {
    let e = DeterministicEmbedder::new();
    let texts_a = ["Respect elders and family hierarchy.", "Hospitality to guests is a duty."];
    let texts_b = ["Individual choice should be respected.", "Guests and hosts share duties equally."];
    let va: Vec<Vec<f64>> = texts_a.iter().map(|t| e.embed(t).unwrap()).collect();
    let vb: Vec<Vec<f64>> = texts_b.iter().map(|t| e.embed(t).unwrap()).collect();
    let ea: Vec<_> = va.iter().enumerate().map(|(i, v)| emb("a", i as u32, v.clone())).collect();
    let eb: Vec<_> = vb.iter().enumerate().map(|(i, v)| emb("b", i as u32, v.clone())).collect();
    let cfg = UtilityConfig::default();
    let (al, be, ga) = (cfg.alpha(), cfg.beta(), cfg.gamma_nov());
    let game = MetaGame::new(cfg, &ea, &eb).unwrap();
    let (anc_a, anc_b) = (centroid(&va), centroid(&vb));
    for j in 0..2 {
        for k in 0..2 {
            let want_a = al * dot(&va[j], &anc_a) + be * dot(&va[j], &vb[k]) + ga;
            let want_b = al * dot(&vb[k], &anc_b) + be * dot(&vb[k], &va[j]) + ga;
            assert!((game.matrix().a(j, k) - want_a).abs() <= 1e-12);
            assert!((game.matrix().b(j, k) - want_b).abs() <= 1e-12);
        }
    }
    let rebuilt = build_utility_matrix(
        &cfg,
        SideInput { embeddings: &ea, anchor: &emb("a", 99, anc_a.clone()), initial_count: 2 },
        SideInput { embeddings: &eb, anchor: &emb("b", 99, anc_b.clone()), initial_count: 2 },
    )
    .unwrap();
    for j in 0..2 {
        for k in 0..2 {
            assert!((rebuilt.a(j, k) - game.matrix().a(j, k)).abs() <= 1e-12);
        }
    }
}

#[test]
fn three_opponents_weighted_acceptance() {
    let e = DeterministicEmbedder::new();
    let cand = e.embed("Mutual respect across borders.").unwrap();
    let opp = ["Respect borders.", "Trade openly with neighbours.", "Mutual aid in hard times."];
    let vs: Vec<Vec<f64>> = opp.iter().map(|t| e.embed(t).unwrap()).collect();
    let w = [0.6, 0.3, 0.1];
    let want: f64 = vs.iter().zip(w).map(|(v, p)| p * dot(&cand, v)).sum();
    let opp_e: Vec<_> = vs.iter().enumerate().map(|(i, v)| emb("b", i as u32, v.clone())).collect();
    let dist = WeightDistribution::from_parts(&opp_e.iter().map(|e| e.gid.clone()).collect::<Vec<_>>(), &w).unwrap();
    let got = acceptance(&emb("a", 0, cand), &opp_e, &dist).unwrap();
    assert!((got - want).abs() <= 1e-12);
}

#[test]
fn identical_texts_give_unit_utility() {
    let e = DeterministicEmbedder::new();
    let v = e.embed("Share the harvest with the village.").unwrap();
    let game = MetaGame::new(UtilityConfig::default(), &[emb("a", 0, v.clone())], &[emb("b", 0, v)]).unwrap();
    assert_eq!(game.matrix().a(0, 0), 1.0);
    assert_eq!(game.matrix().b(0, 0), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn utilities_stay_in_bounds(seed in any::<u64>(), nonneg in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = UtilityConfig::default();
        let ea: Vec<_> = (0..2).map(|i| emb("a", i, unit_vector(&mut rng, nonneg))).collect();
        let eb: Vec<_> = (0..2).map(|i| emb("b", i, unit_vector(&mut rng, nonneg))).collect();
        let mut game = MetaGame::new(cfg, &ea, &eb).unwrap();
        game.add_guideline(Side::A, emb("a", 2, unit_vector(&mut rng, nonneg))).unwrap();
        game.add_guideline(Side::B, emb("b", 2, unit_vector(&mut rng, nonneg))).unwrap();
        let (lo, hi) = if nonneg {
            (0.0, 1.0 + cfg.gamma_nov())
        } else {
            ((-cfg.alpha() - cfg.beta()).min(0.0), cfg.alpha() + cfg.beta() + 2.0 * cfg.gamma_nov())
        };
        for row in game.matrix().payoff_a().iter().chain(game.matrix().payoff_b()) {
            for &x in row {
                prop_assert!(x >= lo - 1e-12 && x <= hi + 1e-12, "{x}");
            }
        }
    }

    #[test]
    fn best_candidate_is_scale_invariant(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ea: Vec<_> = (0..2).map(|i| emb("a", i, unit_vector(&mut rng, false))).collect();
        let eb: Vec<_> = (0..2).map(|i| emb("b", i, unit_vector(&mut rng, false))).collect();
        let cands: Vec<_> = (0..3).map(|i| emb("a", 10 + i, unit_vector(&mut rng, false))).collect();
        let wb = random_weights(&mut rng, 2);
        let argmax = |cfg: UtilityConfig<f64>| {
            let game = MetaGame::new(cfg, &ea, &eb).unwrap();
            let dist = WeightDistribution::from_parts(&game.gids(Side::B), &wb).unwrap();
            let scores: Vec<f64> = cands.iter().map(|e| game.candidate_terms(Side::A, e, &dist).unwrap().total).collect();
            (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b })
        };
        let base = argmax(UtilityConfig::new(5.0, 5.0, 2.0, 0.0).unwrap());
        let scaled = argmax(UtilityConfig::new(5.0 * c, 5.0 * c, 2.0 * c, 0.0).unwrap());
        prop_assert_eq!(base, scaled);
    }

    #[test]
    fn matrix_construction_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ea: Vec<_> = (0..3).map(|i| emb("a", i, unit_vector(&mut rng, false))).collect();
        let eb: Vec<_> = (0..2).map(|i| emb("b", i, unit_vector(&mut rng, false))).collect();
        let g1 = MetaGame::new(UtilityConfig::default(), &ea, &eb).unwrap();
        let g2 = MetaGame::new(UtilityConfig::default(), &ea, &eb).unwrap();
        let bits = |g: &MetaGame<f64>| g.matrix().payoff_a().iter().chain(g.matrix().payoff_b()).flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&g1), bits(&g2));
    }
}
