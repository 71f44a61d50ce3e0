use std::path::PathBuf;

use accord_core::types::{Gid, Guideline, WeightDistribution};
use accord_core::verbalizer::{
    change_label, intensity_label, render_position_speech, Intensity, IntensityScale,
};
use proptest::prelude::*;

fn guideline(i: u32, content: &str) -> Guideline {
    Guideline {
        gid: Gid::new("en", i),
        content: content.into(),
        reason: format!("reason {i}"),
        description: format!("description {i}"),
        origin_round: i,
    }
}

fn dist(w: &[f64]) -> WeightDistribution<f64> {
    let gids: Vec<Gid> = (0..w.len() as u32).map(|i| Gid::new("en", i)).collect();
    WeightDistribution::from_parts(&gids, w).unwrap()
}

/// Compares against `tests/golden/<name>`; set `UPDATE_GOLDEN=1` to rewrite.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn heritage() -> Vec<Guideline> {
    vec![
        guideline(0, "Protecting traditional cultural heritage"),
        guideline(1, "Promoting cultural diversity"),
        guideline(2, "Ensuring the rights of minority groups"),
        guideline(3, "Promoting cultural innovation"),
    ]
}

#[test]
fn golden_balanced_four_way() {
    let speech = render_position_speech(
        &heritage(),
        &dist(&[0.45, 0.30, 0.15, 0.10]),
        Some(&dist(&[0.35, 0.40, 0.15, 0.10])),
    )
    .unwrap();
    golden("speech_balanced.txt", &speech);
    assert!(speech.contains("relatively balanced"));
    let positions: Vec<usize> = heritage().iter().map(|g| speech.find(&g.content).unwrap()).collect();
    assert!(positions.windows(2).all(|p| p[0] < p[1]), "ranking follows descending weight");
    for label in ["high priority", "moderate priority", "low priority", "extremely low priority"] {
        assert!(speech.contains(label), "{label}");
    }
}

#[test]
fn golden_concentrated_after_concession() {
    let gs = vec![guideline(0, "Respect personal autonomy"), guideline(1, "Prioritize individual rights")];
    let prev = WeightDistribution::new(vec![(Gid::new("en", 0), 1.0)]).unwrap();
    let speech = render_position_speech(&gs, &dist(&[0.75, 0.25]), Some(&prev)).unwrap();
    golden("speech_concentrated.txt", &speech);
    assert!(speech.contains("highly concentrated"));
    assert!(speech.contains("significantly decreased"));
    assert!(speech.contains("newly proposed"));
}

#[test]
fn golden_mixed_with_zero_weight() {
    let gs = vec![
        guideline(0, "Elders settle family disputes"),
        guideline(1, "Children choose their own careers"),
        guideline(2, "Community service before adulthood"),
        guideline(3, "Marriage requires family consent"),
    ];
    let speech = render_position_speech(
        &gs,
        &dist(&[0.52, 0.45, 0.03, 0.0]),
        Some(&dist(&[0.52, 0.40, 0.04, 0.04])),
    )
    .unwrap();
    golden("speech_mixed.txt", &speech);
    assert!(speech.contains("mixed emphasis"));
    assert!(speech.contains("set aside"));
}

#[test]
fn rendering_is_deterministic() {
    let w = dist(&[0.45, 0.30, 0.15, 0.10]);
    let a = render_position_speech(&heritage(), &w, None).unwrap();
    let b = render_position_speech(&heritage(), &w, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reference_labels() {
    assert_eq!(intensity_label(0.45).unwrap(), Intensity::High);
    assert_eq!(intensity_label(0.30).unwrap(), Intensity::Moderate);
    assert_eq!(intensity_label(0.15).unwrap(), Intensity::Low);
    assert_eq!(intensity_label(0.10).unwrap(), Intensity::ExtremelyLow);
    assert_eq!(change_label(Some(1.0), 0.75).to_string(), "significantly decreased");
}

#[test]
fn boundaries_switch_label() {
    for b in IntensityScale::default().cuts() {
        assert_ne!(intensity_label(b - 1e-9).unwrap(), intensity_label(b).unwrap(), "{b}");
    }
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #[test]
    fn intensity_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(intensity_label(lo).unwrap() <= intensity_label(hi).unwrap());
    }

    #[test]
    fn every_content_appears_exactly_once(
        (w, prev) in (1usize..7).prop_flat_map(|n| (weights(n), proptest::option::of(weights(n))))
    ) {
        let gs: Vec<Guideline> = (0..w.len() as u32).map(|i| guideline(i, &format!("Guideline-{i}-XQ"))).collect();
        let prev = prev.map(|p| dist(&p));
        let speech = render_position_speech(&gs, &dist(&w), prev.as_ref()).unwrap();
        for g in &gs {
            prop_assert_eq!(speech.matches(&g.content).count(), 1);
        }
        prop_assert_eq!(speech.clone(), render_position_speech(&gs, &dist(&w), prev.as_ref()).unwrap());
    }
}
