use cvb_core::augment::*;
use cvb_core::engine::StoppingRule;
use cvb_core::gmm::*;
use cvb_core::rng::Stream;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn optimal_weights_ignore_a_common_shift(
        kls in prop::collection::vec(0.0f64..20.0, 1..12),
        shift in -50.0f64..50.0,
    ) {
        let a = optimal_weights(&CandidateScore::uniform(&kls)).unwrap();
        let shifted: Vec<f64> = kls.iter().map(|k| k + shift).collect();
        let b = optimal_weights(&CandidateScore::uniform(&shifted)).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn optimal_weights_beat_random_weights(
        kls in prop::collection::vec(0.0f64..10.0, 2..10),
        seed in 0u64..1_000_000,
    ) {
        let scores = CandidateScore::uniform(&kls);
        let w = optimal_weights(&scores).unwrap();
        let best = kl_upper_bound(&scores, &w).unwrap();
        prop_assert!((best - optimal_bound(&scores).unwrap()).abs() < 1e-10);
        let mut s = Stream::new(seed, 0);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..kls.len()).map(|_| s.uniform() + 1e-9).collect();
            let r = MixtureWeights::normalized(raw).unwrap();
            prop_assert!(best <= kl_upper_bound(&scores, &r).unwrap() + 1e-12);
        }
        // The bound never exceeds the best single candidate under a uniform prior.
        let single = kls.iter().cloned().fold(f64::INFINITY, f64::min) + (kls.len() as f64).ln();
        prop_assert!(best <= single + 1e-12);
    }
}

#[test]
fn equal_scores_give_uniform_weights() {
    let w = optimal_weights(&CandidateScore::uniform(&[-3.25; 7])).unwrap();
    for &x in w.as_slice() {
        assert!((x - 1.0 / 7.0).abs() < 1e-15);
    }
}

fn anchored_runs() -> Vec<CvbAnchorResult> {
    let g = generate_data(4, 2.5, 12, &mut Stream::new(11, 3)).unwrap();
    (0..12)
        .map(|j| cvb_run(&g.data, j, &Init::corners(4), &StoppingRule::default()).unwrap())
        .collect()
}

#[test]
fn cvb3_with_uniform_weights_has_cvb1_means() {
    let runs = anchored_runs();
    let a = scheme_cvb1(&runs).unwrap();
    let b = scheme_cvb3_with_weights(&runs, &MixtureWeights::uniform(runs.len()).unwrap()).unwrap();
    assert_eq!(a.means, b.means);
    assert_eq!(a.elbo, b.elbo);
}

#[test]
fn cvb3_with_one_hot_weights_is_cvb2() {
    let runs = anchored_runs();
    let two = scheme_cvb2(&runs).unwrap();
    let three = scheme_cvb3_with_weights(&runs, &two.weights).unwrap();
    assert_eq!(two.means, three.means);
    assert_eq!(two.labels, three.labels);
    assert_eq!(two.elbo, three.elbo);
    assert!(!three.elbo_heuristic);
}

#[test]
fn cvb3_means_are_the_weighted_structure_means() {
    let runs = anchored_runs();
    let out = scheme_cvb3(&runs).unwrap();
    let elbos: Vec<f64> = runs.iter().map(|r| r.elbo()).collect();
    let m = elbos.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = elbos.iter().map(|e| (e - m).exp()).collect();
    let tot: f64 = raw.iter().sum();
    for c in 0..4 {
        for d in 0..2 {
            let want: f64 = runs.iter().zip(&raw).map(|(r, w)| w / tot * r.means[c][d]).sum();
            assert!((out.means[c][d] - want).abs() < 1e-12);
        }
    }
}
