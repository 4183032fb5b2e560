use std::collections::BTreeMap;

use kbscore::embedding::{cosine, EmbeddingModel};
use kbscore::profession::{
    learn, normalize_score, predict_profession, score_propagation, KnowledgeState, Neighborhood,
    PropagationConfig, Provenance, ScoredEvidence,
};
use kbscore::{Score, Triple};
use proptest::prelude::*;

fn s(v: u8) -> Score {
    Score::new(v).unwrap()
}

fn model(rows: &[(&str, Vec<f32>)]) -> EmbeddingModel {
    EmbeddingModel::from_vectors(rows.iter().map(|(w, v)| (*w, v.clone()))).unwrap()
}

/// Independent weighted mean.
fn oracle_mean(ev: &[(f64, f64)]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(r, w) in ev {
        num += r * w;
        den += w;
    }
    num / den
}

fn to_evidence(ev: &[(f64, f64)]) -> Vec<ScoredEvidence> {
    ev.iter().map(|&(r, w)| ScoredEvidence::new(r, w).unwrap()).collect()
}

const NEIGHBORS: [(&str, f64); 10] = [
    ("george_w_bush", 0.868378),
    ("bill_clinton", 0.842833),
    ("hillary_clinton", 0.824706),
    ("john_mccain", 0.791295),
    ("joe_biden", 0.770765),
    ("john_kerry", 0.761532),
    ("mitt_romney", 0.754377),
    ("george_h_w_bush", 0.754377),
    ("jimmy_carter", 0.746474),
    ("ronald_reagan", 0.731227),
];

/// `barack_obama` on the first axis; neighbor i at the requested cosine
/// with its remaining length on its own axis.
fn obama_model() -> EmbeddingModel {
    let dim = NEIGHBORS.len() + 1;
    let mut rows = vec![("barack_obama", {
        let mut v = vec![0.0f32; dim];
        v[0] = 1.0;
        v
    })];
    for (i, (name, c)) in NEIGHBORS.iter().enumerate() {
        let mut v = vec![0.0f32; dim];
        v[0] = *c as f32;
        v[i + 1] = (1.0 - c * c).sqrt() as f32;
        rows.push((name, v));
    }
    model(&rows)
}

fn obama_state() -> KnowledgeState {
    let mut state = KnowledgeState::new();
    for (p, v) in [("politician", 7), ("lawyer", 0), ("law_professor", 1), ("author", 0)] {
        state.insert("barack_obama", p, s(v), Provenance::GroundTruth);
    }
    state
}

#[test]
fn obama_scores_reach_george_w_bush() {
    let model = obama_model();
    let space = Neighborhood::new(&model);
    let round = score_propagation(&obama_state(), &space, &PropagationConfig::default()).unwrap();

    let bush = &round.evidence["george_w_bush"];
    let expected = [("author", 0.0), ("law_professor", 1.0), ("lawyer", 0.0), ("politician", 7.0)];
    assert_eq!(bush.len(), 4);
    for (profession, rel) in expected {
        let ev = &bush[profession];
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].rel_score, rel);
        assert!((ev[0].sim_score - 0.868378).abs() < 1e-6, "{}", ev[0].sim_score);
    }
    // every listed neighbor clears the threshold and the source is excluded
    assert_eq!(round.evidence.len(), 10);
    assert!(!round.evidence.contains_key("barack_obama"));

    let mut state = obama_state();
    state.merge(&round.scores);
    let config = PropagationConfig::default();
    assert_eq!(
        predict_profession("george_w_bush", "politician", &state, &space, &config).unwrap(),
        s(7)
    );
}

#[test]
fn tied_neighbors_come_in_vocabulary_order() {
    let model = obama_model();
    let hits = Neighborhood::new(&model).similar_persons("barack_obama", 10).unwrap();
    let names: Vec<&str> = hits.iter().map(|h| h.word.as_str()).collect();
    let expected: Vec<&str> = NEIGHBORS.iter().map(|n| n.0).collect();
    assert_eq!(names, expected);
}

#[test]
fn second_politician_tuple_rounds_to_seven() {
    let n = normalize_score(&to_evidence(&[(7.0, 0.868378), (6.0, 0.67656)])).unwrap();
    assert!((n.z - 1.544938).abs() < 1e-6);
    assert!((n.mean - 6.5621).abs() < 1e-3);
    assert_eq!(n.score, s(7));
}

#[test]
fn threshold_can_filter_every_neighbor() {
    let model = model(&[("a", vec![1.0, 0.0]), ("b", vec![0.3, 1.0]), ("c", vec![-1.0, 0.1])]);
    let mut state = KnowledgeState::new();
    state.insert("a", "x", s(5), Provenance::GroundTruth);
    let round =
        score_propagation(&state, &Neighborhood::new(&model), &PropagationConfig::default()).unwrap();
    assert!(round.scores.is_empty());
    assert!(round.evidence.is_empty());
}

/// a–b–c–d–e on the unit circle; adjacent cosines 0.8, 0.6, 0.8, 0.6, all
/// others at most 0.
fn chain_model() -> EmbeddingModel {
    model(&[
        ("a", vec![1.0, 0.0]),
        ("b", vec![0.8, 0.6]),
        ("c", vec![0.0, 1.0]),
        ("d", vec![-0.6, 0.8]),
        ("e", vec![-1.0, 0.0]),
    ])
}

fn all_seeded() -> PropagationConfig {
    PropagationConfig {
        seed_fraction: 1.0,
        ..PropagationConfig::default()
    }
}

#[test]
fn five_person_chain_matches_hand_simulation() {
    let model = chain_model();
    let train = vec![
        Triple::scored("a", "x", s(7)),
        Triple::scored("a", "y", s(1)),
        Triple::scored("c", "x", s(3)),
    ];
    let (state, report) = learn(&train, &Neighborhood::new(&model), &all_seeded()).unwrap();

    // round 1: b <- a (0.8) and c (0.6); d <- c (0.8)
    //   b.x = (7*0.8 + 3*0.6) / 1.4 = 5.29 -> 5, b.y = 1, d.x = 3
    // round 2: c.y <- b (0.6) = 1; e.x <- d (0.6) = 3
    // round 3: d.y <- c (0.8) = 1; no new person
    let gt = Provenance::GroundTruth;
    let pr = Provenance::Propagated;
    let expected = [
        ("a", "x", 7, gt),
        ("a", "y", 1, gt),
        ("b", "x", 5, pr),
        ("b", "y", 1, pr),
        ("c", "x", 3, gt),
        ("c", "y", 1, pr),
        ("d", "x", 3, pr),
        ("d", "y", 1, pr),
        ("e", "x", 3, pr),
    ];
    let got: Vec<(&str, &str, u8, Provenance)> = state
        .iter()
        .map(|(p, j, e)| (p, j, e.score.get(), e.provenance))
        .collect();
    assert_eq!(got, expected);
    assert_eq!(report.iterations, 3);
    assert_eq!(report.person_counts, [2, 4, 5, 5]);
    assert!(report.converged);
}

#[test]
fn three_person_chain_converges_in_three_rounds() {
    let model = model(&[("a", vec![1.0, 0.0]), ("b", vec![0.8, 0.6]), ("c", vec![0.0, 1.0])]);
    let train = vec![Triple::scored("a", "x", s(6))];
    let (state, report) = learn(&train, &Neighborhood::new(&model), &all_seeded()).unwrap();
    assert_eq!(report.iterations, 3);
    assert_eq!(state.score("b", "x"), Some(s(6)));
    assert_eq!(state.score("c", "x"), Some(s(6)));
}

#[test]
fn isolated_persons_stop_after_one_round() {
    let model = model(&[("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![-1.0, 0.0])]);
    let train: Vec<Triple> = ["a", "b", "c"]
        .iter()
        .map(|p| Triple::scored(*p, "x", s(4)))
        .collect();
    let (state, report) = learn(&train, &Neighborhood::new(&model), &PropagationConfig::default()).unwrap();
    // first ceil(0.7 * 3) = 3 triples
    assert_eq!(state.entry_count(), 3);
    assert_eq!(report.iterations, 1);
    assert!(learn(&[], &Neighborhood::new(&model), &PropagationConfig::default()).is_err());
}

#[test]
fn seed_is_the_leading_share() {
    let model = chain_model();
    let train: Vec<Triple> = (0..10).map(|i| Triple::scored("a", format!("p{i}"), s(3))).collect();
    let config = PropagationConfig {
        topn: 1,
        threshold: 0.99,
        ..PropagationConfig::default()
    };
    let (state, _) = learn(&train, &Neighborhood::new(&model), &config).unwrap();
    let seeded: Vec<&str> = state.iter().map(|(_, j, _)| j).collect();
    assert_eq!(seeded, ["p0", "p1", "p2", "p3", "p4", "p5", "p6"]);
}

#[test]
fn persons_without_vectors_are_skipped() {
    let model = chain_model();
    let train = vec![Triple::scored("ghost", "x", s(7)), Triple::scored("a", "x", s(2))];
    let (_, report) = learn(&train, &Neighborhood::new(&model), &all_seeded()).unwrap();
    assert!(report.skipped.contains("ghost"));
}

/// Ten words: person `p`, target `t`, five professions near `t`, three
/// unrelated words. Exactly two of the near professions clear 0.4 against `p`.
fn step_three_model() -> EmbeddingModel {
    model(&[
        ("p", vec![0.0, 1.0, 0.0]),
        ("t", vec![1.0, 0.0, 0.0]),
        ("s1", vec![1.0, 0.6, 0.0]),
        ("s2", vec![1.0, 0.5, 0.1]),
        ("s3", vec![1.0, 0.2, 0.3]),
        ("s4", vec![1.0, 0.0, 0.5]),
        ("s5", vec![1.0, -0.3, 0.4]),
        ("o1", vec![-1.0, 0.0, 0.0]),
        ("o2", vec![0.0, 0.0, 1.0]),
        ("o3", vec![0.0, -1.0, 0.2]),
    ])
}

#[test]
fn similar_professions_are_counted() {
    let model = step_three_model();
    let config = PropagationConfig::default();

    // exhaustive check of the construction
    let t = model.vector("t").unwrap();
    let mut by_sim: Vec<(f64, &str)> = model
        .vocab()
        .words()
        .iter()
        .filter(|w| *w != "t")
        .map(|w| (cosine(t, model.vector(w).unwrap()).unwrap(), w.as_str()))
        .collect();
    by_sim.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top5: Vec<&str> = by_sim[..5].iter().map(|x| x.1).collect();
    let p = model.vector("p").unwrap();
    let clearing = top5
        .iter()
        .filter(|w| cosine(p, model.vector(w).unwrap()).unwrap() >= 0.4)
        .count();
    assert_eq!(clearing, 2);

    let space = Neighborhood::new(&model);
    let state = KnowledgeState::new();
    assert_eq!(predict_profession("p", "t", &state, &space, &config).unwrap(), s(2));
    // unknown profession falls back
    assert_eq!(
        predict_profession("p", "unknown", &state, &space, &config).unwrap(),
        config.fallback_score
    );
}

#[test]
fn neighbor_scores_come_before_similar_professions() {
    let model = chain_model();
    let mut state = KnowledgeState::new();
    state.insert("b", "x", s(6), Provenance::GroundTruth);
    state.insert("d", "x", s(2), Provenance::GroundTruth);
    let space = Neighborhood::new(&model);
    // c: b at 0.6, d at 0.8 -> (6*0.6 + 2*0.8) / 1.4 = 3.71 -> 4
    let got = predict_profession("c", "x", &state, &space, &PropagationConfig::default()).unwrap();
    assert_eq!(got, s(4));
}

#[test]
fn restricted_neighborhood_ignores_other_words() {
    let model = chain_model();
    let space = Neighborhood::new(&model).with_persons(["a", "c"]);
    let hits = space.similar_persons("b", 10).unwrap();
    let names: Vec<&str> = hits.iter().map(|h| h.word.as_str()).collect();
    assert_eq!(names, ["a", "c"]);
}

#[test]
fn learned_state_survives_a_file_round_trip() {
    let model = chain_model();
    let train = vec![Triple::scored("a", "x", s(7)), Triple::scored("c", "x", s(3))];
    let (state, _) = learn(&train, &Neighborhood::new(&model), &all_seeded()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("profession.state");
    state.save(&path).unwrap();
    assert_eq!(KnowledgeState::load(&path).unwrap(), state);
}

fn evidence_list() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=7.0, 1e-3f64..=1.0), 1..=20)
}

proptest! {
    #[test]
    fn matches_weighted_mean_oracle(ev in evidence_list()) {
        let n = normalize_score(&to_evidence(&ev)).unwrap();
        prop_assert!((n.mean - oracle_mean(&ev)).abs() < 1e-9);
        prop_assert_eq!(n.score, Score::from_real(oracle_mean(&ev)));
    }

    #[test]
    fn mean_lies_between_extremes(ev in evidence_list()) {
        let n = normalize_score(&to_evidence(&ev)).unwrap();
        let lo = ev.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        let hi = ev.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(n.mean >= lo - 1e-12 && n.mean <= hi + 1e-12);
        prop_assert!(n.score.get() <= 7);
    }

    #[test]
    fn similarity_scale_does_not_matter(ev in evidence_list(), c in 0.01f64..100.0) {
        let scaled: Vec<(f64, f64)> = ev.iter().map(|&(r, w)| (r, w * c)).collect();
        let a = normalize_score(&to_evidence(&ev)).unwrap();
        let b = normalize_score(&to_evidence(&scaled)).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-9);
    }

    /// A dominant item whose fellow items sit within 2 of it keeps the
    /// rounded score within 1 of its own.
    #[test]
    fn dominant_evidence_bounds_the_score(
        dominant in 0u8..=7,
        others in prop::collection::vec((-2i8..=2, 1e-3f64..=1.0), 0..10),
        extra in 1e-6f64..1.0,
    ) {
        let others: Vec<(f64, f64)> = others
            .into_iter()
            .map(|(d, w)| ((dominant as i8 + d).clamp(0, 7) as f64, w))
            .collect();
        let rest: f64 = others.iter().map(|o| o.1).sum();
        let mut ev = vec![(dominant as f64, rest + extra)];
        ev.extend(others);
        let n = normalize_score(&to_evidence(&ev)).unwrap();
        prop_assert!((n.score.get() as i16 - dominant as i16).abs() <= 1);
    }
}

#[test]
fn dominance_alone_does_not_bound_the_score() {
    // the dominant item outweighs the rest, but only barely, and the others
    // are 7 apart: the mean lands near the midpoint
    let n = normalize_score(&to_evidence(&[(0.0, 0.51), (7.0, 0.49)])).unwrap();
    assert_eq!(n.score, s(3));
}

/// Vectors per person and (person, profession, score) training rows.
type World = (Vec<Vec<f32>>, Vec<(usize, usize, u8)>);

fn random_world() -> impl Strategy<Value = World> {
    (2usize..=50).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 4), n),
            prop::collection::vec((0..n, 0usize..4, 0u8..=7), 1..=3 * n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn learning_is_monotone_and_keeps_ground_truth((vectors, rows) in random_world()) {
        let names: Vec<String> = (0..vectors.len()).map(|i| format!("p{i}")).collect();
        let model = EmbeddingModel::from_vectors(
            names.iter().cloned().zip(vectors.iter().map(|v| {
                // keep every vector away from zero
                let mut v = v.clone();
                v[0] += 2.0;
                v
            })),
        )
        .unwrap();
        let train: Vec<Triple> = rows
            .iter()
            .map(|&(p, j, sc)| Triple::scored(names[p].clone(), format!("job{j}"), s(sc)))
            .collect();
        let config = PropagationConfig { threshold: 0.9, topn: 3, ..PropagationConfig::default() };
        let (state, report) = learn(&train, &Neighborhood::new(&model), &config).unwrap();

        prop_assert!(report.iterations <= vectors.len() + 1);
        prop_assert!(report.person_counts.windows(2).all(|w| w[0] <= w[1]));

        let seeded = kbscore::profession::seed_len(train.len(), config.seed_fraction);
        let mut first: BTreeMap<(&str, &str), Score> = BTreeMap::new();
        for t in &train[..seeded] {
            first.entry((&t.subject, &t.value)).or_insert(t.score.unwrap());
        }
        for ((p, j), score) in first {
            let e = state.get(p, j).unwrap();
            prop_assert_eq!(e.score, score);
            prop_assert_eq!(e.provenance, Provenance::GroundTruth);
        }

        // same inputs, same answers
        let space = Neighborhood::new(&model);
        for name in names.iter().take(5) {
            let a = predict_profession(name, "job0", &state, &space, &config).unwrap();
            let b = predict_profession(name, "job0", &state, &space, &config).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
