use evolex_core::cascade::{
    brute_force_top_m, ca_top_m_full, guess_and_verify, guess_and_verify_traced, pairwise_disjoint,
    scored, GuessTrace,
};
use evolex_core::{ca_top_m, Effect, ExplainBy, Explanation, ScoredExplanation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dict(cards: &[usize]) -> ExplainBy {
    ExplainBy::new(
        (0..cards.len()).map(|i| format!("A{i}")).collect(),
        cards
            .iter()
            .map(|&c| (0..c).map(|v| format!("v{v}")).collect())
            .collect(),
    )
}

fn all_explanations(cards: &[usize]) -> Vec<Explanation> {
    let mut out = Vec::new();
    for (a, &c) in cards.iter().enumerate() {
        for v in 0..c {
            out.push(Explanation::of(&[(a as u16, v as u32)]));
        }
    }
    if cards.len() == 2 {
        for x in 0..cards[0] {
            for y in 0..cards[1] {
                out.push(Explanation::of(&[(0, x as u32), (1, y as u32)]));
            }
        }
    }
    out
}

fn random_fixture(rng: &mut ChaCha8Rng) -> (ExplainBy, Vec<ScoredExplanation>, usize) {
    let attrs = rng.random_range(1..=2);
    let cards: Vec<usize> = (0..attrs).map(|_| rng.random_range(1..=4)).collect();
    let integer = rng.random_bool(0.6);
    let keep = rng.random_range(0.6..=1.0);
    let kept: Vec<Explanation> = all_explanations(&cards)
        .into_iter()
        .filter(|_| rng.random_bool(keep))
        .collect();
    let mut scores: Vec<ScoredExplanation> = kept
        .into_iter()
        .map(|e| ScoredExplanation {
            explanation: e,
            gamma: if integer {
                rng.random_range(0..8) as f64
            } else {
                rng.random_range(0.0..10.0)
            },
            tau: if rng.random_bool(0.5) {
                Effect::Positive
            } else {
                Effect::Negative
            },
        })
        .collect();
    if scores.is_empty() {
        scores.push(scored(Explanation::of(&[(0, 0)]), 1.0));
    }
    let m = rng.random_range(1..=3);
    (dict(&cards), scores, m)
}

fn labels(v: &[ScoredExplanation]) -> Vec<&Explanation> {
    v.iter().map(|s| &s.explanation).collect()
}

fn sorted_by_gamma(scores: &[ScoredExplanation]) -> Vec<ScoredExplanation> {
    let mut chi = scores.to_vec();
    chi.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
    chi
}

#[test]
fn cascade_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..400 {
        let (d, scores, m) = random_fixture(&mut rng);
        let ca = ca_top_m_full(&scores, &d, m).unwrap();
        let bf = brute_force_top_m(&scores, m).unwrap();
        assert_eq!(ca.at_most.total_score, bf.at_most.total_score, "case {case}");
        assert_eq!(labels(&ca.at_most.ranked), labels(&bf.at_most.ranked), "case {case}");
        match (&ca.exact, &bf.exact) {
            (Some(a), Some(b)) => {
                assert_eq!(a.total_score, b.total_score, "case {case}");
                assert_eq!(labels(&a.ranked), labels(&b.ranked), "case {case}");
            }
            (None, None) => {}
            other => panic!("case {case}: exact-size feasibility differs: {other:?}"),
        }
        assert!(pairwise_disjoint(&ca.at_most.ranked));
        assert!(ca.at_most.best.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(ca.at_most.best[0], 0.0);
        assert!(ca
            .at_most
            .ranked
            .windows(2)
            .all(|w| w[0].gamma >= w[1].gamma));
    }
}

#[test]
fn guess_and_verify_returns_the_same_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..400 {
        let (d, scores, m) = random_fixture(&mut rng);
        let chi = sorted_by_gamma(&scores);
        let full = ca_top_m(&chi, &d, m).unwrap();
        for m_bar0 in [m, 2 * m, 10 * m] {
            let gv = guess_and_verify(&chi, &d, m, m_bar0).unwrap();
            assert_eq!(gv.total_score, full.total_score, "case {case} m̄0 {m_bar0}");
            assert_eq!(labels(&gv.ranked), labels(&full.ranked), "case {case} m̄0 {m_bar0}");
        }
    }
}

#[test]
fn guess_and_verify_larger_candidate_sets() {
    // three attributes with a few hundred candidates: no oracle, compare against the full run
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cards = [5usize, 4, 6];
    let d = dict(&cards);
    let mut all = Vec::new();
    for a in 0..5u32 {
        all.push(Explanation::of(&[(0, a)]));
        for b in 0..4u32 {
            all.push(Explanation::of(&[(0, a), (1, b)]));
            for c in 0..6u32 {
                all.push(Explanation::of(&[(0, a), (1, b), (2, c)]));
            }
        }
    }
    for b in 0..4u32 {
        all.push(Explanation::of(&[(1, b)]));
    }
    for c in 0..6u32 {
        all.push(Explanation::of(&[(2, c)]));
        all.push(Explanation::of(&[(1, c % 4), (2, c)]));
    }
    for case in 0..50 {
        let scores: Vec<_> = all
            .iter()
            .map(|e| scored(e.clone(), (rng.random_range(0.0f64..1.0).powi(4) * 100.0).round()))
            .collect();
        let chi = sorted_by_gamma(&scores);
        for m in 1..=4 {
            let full = ca_top_m(&chi, &d, m).unwrap();
            let gv = guess_and_verify(&chi, &d, m, 10 * m).unwrap();
            assert_eq!(labels(&gv.ranked), labels(&full.ranked), "case {case} m {m}");
            assert!(pairwise_disjoint(&full.ranked));
        }
    }
}

/// Three attributes; the best five are two refinements under a2, both under
/// a5, and a6 itself.
fn drill_down_tree() -> (ExplainBy, Vec<ScoredExplanation>) {
    let d = ExplainBy::new(
        vec!["Ai".into(), "Aj".into(), "Ar".into()],
        vec![
            (1..=6).map(|i| format!("a{i}")).collect(),
            (1..=3).map(|i| format!("b{i}")).collect(),
            (1..=2).map(|i| format!("r{i}")).collect(),
        ],
    );
    let e = |pairs: &[(&str, &str)]| d.resolve(pairs).unwrap();
    let s = |pairs: &[(&str, &str)], g: f64| scored(e(pairs), g);
    let scores = vec![
        s(&[("Ai", "a1")], 1.0),
        s(&[("Ai", "a2")], 2.0),
        s(&[("Ai", "a3")], 1.0),
        s(&[("Ai", "a4")], 1.0),
        s(&[("Ai", "a5")], 6.0),
        s(&[("Ai", "a6")], 3.0),
        s(&[("Ai", "a2"), ("Aj", "b1")], 3.0),
        s(&[("Ai", "a2"), ("Aj", "b2")], 1.0),
        s(&[("Ai", "a2"), ("Aj", "b3")], 3.0),
        s(&[("Ai", "a5"), ("Ar", "r1")], 4.0),
        s(&[("Ai", "a5"), ("Ar", "r2")], 4.0),
        s(&[("Ai", "a6"), ("Aj", "b1")], 1.0),
        s(&[("Ai", "a6"), ("Aj", "b2")], 1.0),
        s(&[("Aj", "b1")], 4.0),
        s(&[("Aj", "b2")], 2.0),
        s(&[("Aj", "b3")], 4.0),
        s(&[("Ar", "r1")], 5.0),
        s(&[("Ar", "r2")], 5.0),
    ];
    (d, scores)
}

#[test]
fn drill_down_tree_totals_seventeen() {
    let (d, scores) = drill_down_tree();
    let top = ca_top_m(&scores, &d, 5).unwrap();
    assert_eq!(top.total_score, 17.0);
    let mut g: Vec<f64> = top.ranked.iter().map(|s| s.gamma).collect();
    g.sort_by(f64::total_cmp);
    assert_eq!(g, vec![3.0, 3.0, 3.0, 4.0, 4.0]);
    assert!(pairwise_disjoint(&top.ranked));
    let bf = evolex_core::cascade::brute_force_top_m_bounded(&scores, 5, 32).unwrap();
    assert_eq!(bf.at_most.total_score, 17.0);
    let gv = guess_and_verify(&sorted_by_gamma(&scores), &d, 5, 5).unwrap();
    assert_eq!(gv.total_score, 17.0);
}

#[test]
fn verification_fails_then_succeeds() {
    let d = dict(&[2, 1]);
    // the prefix {X, Y} overlaps, so the disjoint Z just past it is needed
    let chi = vec![
        scored(Explanation::of(&[(0, 0)]), 10.0),
        scored(Explanation::of(&[(0, 0), (1, 0)]), 9.0),
        scored(Explanation::of(&[(0, 1)]), 8.0),
    ];
    let (top, trace) = guess_and_verify_traced(&chi, &d, 2, 2).unwrap();
    assert_eq!(
        trace,
        GuessTrace {
            rounds: 2,
            final_m_bar: 4
        }
    );
    assert_eq!(top.total_score, 18.0);
    assert_eq!(
        brute_force_top_m(&chi, 2).unwrap().at_most.total_score,
        18.0
    );
}

#[test]
fn disjoint_candidates_accept_first_round() {
    let d = dict(&[60]);
    let chi: Vec<_> = (0..60)
        .map(|i| scored(Explanation::of(&[(0, i)]), 100.0 - i as f64))
        .collect();
    let (top, trace) = guess_and_verify_traced(&chi, &d, 3, 30).unwrap();
    assert_eq!(trace.rounds, 1);
    assert_eq!(top.total_score, 100.0 + 99.0 + 98.0);
}

#[test]
fn prefix_covering_everything_is_plain_cascade() {
    let (d, scores) = drill_down_tree();
    let chi = sorted_by_gamma(&scores);
    let (top, trace) = guess_and_verify_traced(&chi, &d, 3, 100).unwrap();
    assert_eq!(trace.rounds, 1);
    assert_eq!(top, ca_top_m(&chi, &d, 3).unwrap());
}
