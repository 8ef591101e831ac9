use cvb_core::engine::{RunOptions, StoppingRule};
use cvb_core::gmm::*;
use cvb_core::rng::Stream;
use proptest::prelude::*;

fn fixed() -> DataSet {
    let x = vec![
        [-1.2, 0.8],
        [-0.5, 1.9],
        [-2.0, 1.1],
        [1.4, -0.7],
        [0.9, -1.6],
        [2.2, -0.3],
        [0.1, 0.2],
        [-0.3, -0.4],
    ];
    DataSet::new(x, 2).unwrap()
}

fn rule() -> StoppingRule {
    StoppingRule::default()
}

fn close(a: &[[f64; 2]], b: &[[f64; 2]], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(u, v)| (u[0] - v[0]).abs() < tol && (u[1] - v[1]).abs() < tol)
}

const LABELS: [usize; 8] = [0, 0, 0, 1, 1, 1, 0, 1];

#[test]
fn vb_on_fixed_data_matches_reference() {
    let r = vb_run(&fixed(), &Init::corners(2), &rule()).unwrap();
    assert!((r.trace.final_elbo() - -16.57941972821337).abs() < 1e-9);
    assert_eq!(r.trace.iterations(), 4);
    assert_eq!(r.p.argmax_labels().labels(), &LABELS);
    let want = [
        [-0.9261013539631981, 0.9072682874469077],
        [1.0696403429063794, -0.65221960378008],
    ];
    assert!(close(&r.means, &want, 1e-9), "{:?}", r.means);
}

#[test]
fn em2_on_fixed_data_matches_reference() {
    let r = em2_run(&fixed(), &Init::corners(2), &rule()).unwrap();
    assert!((r.trace.final_elbo() - -17.482595626893758).abs() < 1e-9);
    assert_eq!(r.trace.iterations(), 4);
    assert_eq!(r.p.argmax_labels().labels(), &LABELS);
}

#[test]
fn hard_assignment_on_fixed_data_matches_reference() {
    let k = kmeans_run(&fixed(), &Init::corners(2), &rule()).unwrap();
    assert!((k.trace.final_elbo() - -18.85301653127476).abs() < 1e-9);
    assert_eq!(k.trace.iterations(), 3);
    assert_eq!(k.labels.labels(), &LABELS);
    assert!(close(&k.means, &[[-0.9, 1.0], [1.05, -0.75]], 1e-12));
    let e = em1_run(&fixed(), &Init::corners(2), &rule()).unwrap();
    assert!((e.trace.final_elbo() - -17.94985112069585).abs() < 1e-9);
    assert_eq!(e.trace.iterations(), 3);
    assert_eq!(e.labels.labels(), &LABELS);
}

#[test]
fn cvb_anchors_on_fixed_data_match_reference() {
    let a0 = cvb_run(&fixed(), 0, &Init::corners(2), &rule()).unwrap();
    assert!((a0.elbo() - -16.53616433624962).abs() < 1e-9);
    assert_eq!(a0.trace.iterations(), 4);
    let want = [
        [-0.9248324830563758, 0.9134856209262534],
        [1.0518461924453912, -0.6405599543444851],
    ];
    assert!(close(&a0.means, &want, 1e-9), "{:?}", a0.means);
    let a6 = cvb_run(&fixed(), 6, &Init::corners(2), &rule()).unwrap();
    assert!((a6.elbo() - -16.40702426516279).abs() < 1e-9);
    assert_eq!(a6.trace.iterations(), 5);
}

#[test]
fn vb_on_separated_four_cluster_data_matches_reference() {
    let x = upsilon0(4)
        .iter()
        .map(|m| [3.0 * m[0] + 1.0, 3.0 * m[1] + 1.0])
        .collect();
    let r = vb_run(&DataSet::new(x, 4).unwrap(), &Init::corners(4), &rule()).unwrap();
    assert!((r.trace.final_elbo() - 1.218398580336685e-07).abs() < 1e-9);
    assert_eq!(r.trace.iterations(), 5);
}

#[test]
fn every_cvb_structure_bounds_vb_from_above_on_fixed_data() {
    // The CVB family contains the VB one (W[i] independent of l_j), so each anchored
    // optimum should be at least as good as VB on this instance.
    let vb = vb_run(&fixed(), &Init::corners(2), &rule()).unwrap().trace.final_elbo();
    for j in 0..8 {
        let r = cvb_run(&fixed(), j, &Init::corners(2), &rule()).unwrap();
        assert!(r.elbo() >= vb - 1e-9, "anchor {j}: {} < {vb}", r.elbo());
    }
}

#[test]
fn label_steps_leave_means_untouched() {
    let data = fixed();
    let init = Init::corners(2);
    let mut vb = SoftAssign::vb(&data, &init);
    let mut prev = vb
        .mu
        .iter()
        .flatten()
        .copied()
        .chain(vb.s2.iter().copied())
        .collect::<Vec<f64>>();
    let t = cvb_core::engine::run_with(&mut vb, &rule(), RunOptions { snapshots: true }).unwrap();
    for row in &t.rows {
        let s = row.snapshot.clone().unwrap();
        if row.slot == 0 {
            assert_eq!(s, prev, "iteration {}", row.iteration);
        }
        prev = s;
    }
    let r = cvb_run_with(&data, 3, &init, &rule(), RunOptions { snapshots: true }).unwrap();
    let conditional = 2 * 4 + 4;
    let mut prev: Vec<f64> = vec![-1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, 1.0, 1.0];
    for row in &r.trace.rows {
        let s = row.snapshot.clone().unwrap();
        if row.slot == 0 {
            assert_eq!(&s[..conditional], &prev[..], "iteration {}", row.iteration);
        }
        prev = s[..conditional].to_vec();
    }
}

#[test]
fn cvb2_ties_go_to_lowest_index() {
    let a = cvb_run(&fixed(), 2, &Init::corners(2), &rule()).unwrap();
    let mut b = a.clone();
    b.anchor = 5;
    let out = scheme_cvb2(&[a.clone(), b]).unwrap();
    assert_eq!(out.weights.as_slice(), &[1.0, 0.0]);
    assert_eq!(out.means, a.means);
}

#[test]
fn generated_data_centres_on_true_means() {
    let (k, n, radius) = (4, 400, 3.0);
    let mut err = 0.0f64;
    for seed in 0..5 {
        let g = generate_data(k, radius, n, &mut Stream::new(7, seed)).unwrap();
        let counts = g.truth.counts();
        for (c, &count) in counts.iter().enumerate() {
            let mut m = [0.0; 2];
            for (i, x) in g.data.x.iter().enumerate() {
                if g.truth.labels()[i] == c {
                    m[0] += x[0] / count as f64;
                    m[1] += x[1] / count as f64;
                }
            }
            let se = (1.0 / count as f64).sqrt();
            err = err.max(((m[0] - g.means[c][0]).abs()).max((m[1] - g.means[c][1]).abs()) / se);
        }
    }
    assert!(err < 4.5, "worst standardised deviation {err}");
}

fn instance(seed: u64, radius: f64) -> Generated {
    generate_data(4, radius, 20, &mut Stream::new(2024, seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn all_traces_are_monotone(seed in 0u64..10_000, radius in 0.0f64..6.0) {
        let g = instance(seed, radius);
        let init = Init::corners(4);
        let results = evaluate(&g, &init, &rule(), &Algorithm::ALL, None).unwrap();
        for r in &results {
            for (id, t) in &r.traces {
                prop_assert!(t.is_monotone(1e-9), "{} {}", r.algorithm, id);
            }
            prop_assert!((0.0..=1.0).contains(&r.purity));
        }
    }

    #[test]
    fn stochastic_invariants_hold(seed in 0u64..10_000, radius in 0.0f64..6.0, anchor in 0usize..20) {
        let g = instance(seed, radius);
        let init = Init::corners(4);
        let vb = vb_run(&g.data, &init, &rule()).unwrap();
        prop_assert!(vb.p.max_column_error() < 1e-12);
        let c = cvb_run(&g.data, anchor, &init, &rule()).unwrap();
        prop_assert!(c.state.max_stochastic_error() < 1e-12);
        prop_assert!(c.q.max_column_error() < 1e-12);
    }

    #[test]
    fn bregman_cluster_identity(
        seed in 0u64..10_000,
        w in prop::collection::vec(0.0f64..1.0, 20),
        mu in (-5.0f64..5.0, -5.0f64..5.0),
    ) {
        let g = instance(seed, 3.0);
        let r = bregman_identity_residual(&g.data.x, &w, [mu.0, mu.1]);
        prop_assert!(r.abs() < 1e-9, "{}", r);
    }

    #[test]
    fn kmeans_and_em1_agree_on_labels_for_equal_scales(seed in 0u64..10_000, radius in 0.0f64..6.0) {
        // With s2 fixed at one per cluster the EM₁ labeling rule is the k-means rule,
        // so the first label step is identical.
        let g = instance(seed, radius);
        let init = Init::corners(4);
        let mut km = HardAssign::kmeans(&g.data, &init);
        let mut em = HardAssign::em1(&g.data, &init);
        use cvb_core::engine::ConditionalModel;
        km.update(0);
        em.update(0);
        prop_assert_eq!(km.labels, em.labels);
    }
}
