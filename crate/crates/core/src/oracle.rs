//! Exact posterior for tiny mixture instances by enumerating all `K^N` labelings.
//!
//! Each labeling `L` contributes `ln f(L, X) = Σ_{k non-empty} ln γₖ(L)` with the same
//! dropped constant as the [`crate::gmm`] ELBOs. A cluster with no points contributes a
//! factor of one.

use crate::error::{Error, Result};
use crate::gmm::{DataSet, LabelMatrix, SoftLabelMatrix};
use crate::numeric::{argmax, logsumexp, LN_2PI};

/// Largest enumerable label space.
pub const MAX_LABELINGS: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPosterior {
    /// `ln Σ_L f(L, X)`, modulo the shared constant.
    pub log_evidence: f64,
    pub label_marginals: SoftLabelMatrix,
    /// `E[μₖ | X, cluster k non-empty]`; `None` if every labeling leaves `k` empty.
    pub mean_posterior: Vec<Option<[f64; 2]>>,
    /// Posterior probability that cluster `k` has at least one point.
    pub nonempty_prob: Vec<f64>,
    /// `ln f(L, X)` for every labeling, indexed by the base-`K` code with point 0 as the
    /// most significant digit.
    pub log_joint: Vec<f64>,
}

struct Acc {
    n: Vec<f64>,
    sx: Vec<[f64; 2]>,
    sxx: Vec<f64>,
}

/// Enumerate the label space depth-first, keeping running per-cluster sums.
pub fn enumerate_posterior(data: &DataSet) -> Result<ExactPosterior> {
    let k = data.k;
    let n = data.n();
    let size = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > MAX_LABELINGS {
        return Err(Error::TooLarge {
            size,
            limit: MAX_LABELINGS,
        });
    }
    let mut log_joint = Vec::with_capacity(size as usize);
    let mut acc = Acc {
        n: vec![0.0; k],
        sx: vec![[0.0; 2]; k],
        sxx: vec![0.0; k],
    };
    descend(data, 0, &mut acc, &mut log_joint);
    let log_evidence = logsumexp(&log_joint);

    let mut marg = vec![0.0; n * k];
    let mut mean_acc = vec![[0.0; 2]; k];
    let mut nonempty = vec![0.0; k];
    let mut labels = vec![0usize; n];
    for (code, &lj) in log_joint.iter().enumerate() {
        let w = (lj - log_evidence).exp();
        decode(code, k, &mut labels);
        let mut cnt = vec![0.0; k];
        let mut sx = vec![[0.0; 2]; k];
        for (i, &l) in labels.iter().enumerate() {
            marg[i * k + l] += w;
            cnt[l] += 1.0;
            sx[l][0] += data.x[i][0];
            sx[l][1] += data.x[i][1];
        }
        for c in 0..k {
            if cnt[c] > 0.0 {
                nonempty[c] += w;
                mean_acc[c][0] += w * sx[c][0] / cnt[c];
                mean_acc[c][1] += w * sx[c][1] / cnt[c];
            }
        }
    }
    let mean_posterior = (0..k)
        .map(|c| (nonempty[c] > 0.0).then(|| [mean_acc[c][0] / nonempty[c], mean_acc[c][1] / nonempty[c]]))
        .collect();
    Ok(ExactPosterior {
        log_evidence,
        label_marginals: SoftLabelMatrix::from_raw(k, marg),
        mean_posterior,
        nonempty_prob: nonempty,
        log_joint,
    })
}

impl ExactPosterior {
    /// The single most probable labeling (lowest code on ties). Unlike the argmax of the
    /// label marginals, which relabeling symmetry flattens to `1/K`, this breaks the symmetry.
    pub fn map_labeling(&self) -> LabelMatrix {
        let k = self.label_marginals.k();
        let mut labels = vec![0; self.label_marginals.n()];
        decode(argmax(&self.log_joint), k, &mut labels);
        LabelMatrix::new(k, labels).expect("decoded labels are in range")
    }
}

fn descend(data: &DataSet, i: usize, acc: &mut Acc, out: &mut Vec<f64>) {
    if i == data.n() {
        out.push(leaf(acc));
        return;
    }
    let x = data.x[i];
    let xx = x[0] * x[0] + x[1] * x[1];
    for c in 0..data.k {
        acc.n[c] += 1.0;
        acc.sx[c][0] += x[0];
        acc.sx[c][1] += x[1];
        acc.sxx[c] += xx;
        descend(data, i + 1, acc, out);
        acc.n[c] -= 1.0;
        acc.sx[c][0] -= x[0];
        acc.sx[c][1] -= x[1];
        acc.sxx[c] -= xx;
    }
}

/// `Σₖ [ln(2π/nₖ) − nₖ ln 2π − ½(Σ‖x‖² − ‖Σx‖²/nₖ)]` over non-empty clusters.
fn leaf(acc: &Acc) -> f64 {
    let mut t = 0.0;
    for c in 0..acc.n.len() {
        let n = acc.n[c];
        if n < 0.5 {
            continue;
        }
        let s = acc.sx[c];
        let within = (acc.sxx[c] - (s[0] * s[0] + s[1] * s[1]) / n).max(0.0);
        t += LN_2PI - n.ln() - n * LN_2PI - 0.5 * within;
    }
    t
}

fn decode(mut code: usize, k: usize, labels: &mut [usize]) {
    for l in labels.iter_mut().rev() {
        *l = code % k;
        code /= k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_symmetric() {
        let d = DataSet::new(vec![[0.3, -0.2]], 2).unwrap();
        let e = enumerate_posterior(&d).unwrap();
        assert_eq!(e.label_marginals.column(0), &[0.5, 0.5]);
        // Each labeling: one singleton cluster, ln γ = 0.
        assert!((e.log_evidence - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn too_large_is_rejected() {
        let d = DataSet::new(vec![[0.0, 0.0]; 21], 2).unwrap();
        assert!(matches!(enumerate_posterior(&d), Err(Error::TooLarge { .. })));
        let d = DataSet::new(vec![[0.0, 0.0]; 20], 2).unwrap();
        assert_eq!(enumerate_posterior(&d).unwrap().log_joint.len(), 1 << 20);
    }

    #[test]
    fn codes_follow_point_order() {
        let mut l = [0; 3];
        decode(5, 2, &mut l);
        assert_eq!(l, [1, 0, 1]);
    }
}
