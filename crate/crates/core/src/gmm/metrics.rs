use super::LabelMatrix;
use crate::numeric::sq_dist;

/// `Σₖ (1/N) maxₘ #{i : predicted k and true m}`.
pub fn purity(pred: &LabelMatrix, truth: &LabelMatrix) -> f64 {
    assert_eq!(pred.n(), truth.n(), "purity needs matching N");
    let (kp, kt) = (pred.k(), truth.k());
    let mut table = vec![0usize; kp * kt];
    for (&a, &b) in pred.labels().iter().zip(truth.labels()) {
        table[a * kt + b] += 1;
    }
    let hits: usize = (0..kp)
        .map(|a| table[a * kt..(a + 1) * kt].iter().copied().max().unwrap_or(0))
        .sum();
    hits as f64 / pred.n() as f64
}

/// `(1/K) min_φ ‖φ(Υ̂) − Υ‖²` over all permutations of the estimated means.
pub fn mse_means(pred: &[[f64; 2]], truth: &[[f64; 2]]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "mse needs the same K");
    let k = pred.len();
    assert!(k <= 10, "permutation search limited to K ≤ 10");
    let mut perm: Vec<usize> = (0..k).collect();
    let cost = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(t, &e)| sq_dist(pred[e], truth[t])).sum() };
    let mut best = cost(&perm);
    // Heap's algorithm.
    let mut c = vec![0usize; k];
    let mut i = 1;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / k as f64
}
