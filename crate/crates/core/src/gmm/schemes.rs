//! Combining anchored CVB structures into one estimate.

use super::{CvbAnchorResult, LabelMatrix};
use crate::augment::{mixture_moments, optimal_weights, CandidateScore, MixtureWeights};
use crate::error::{Error, Result};
use crate::numeric::argmax;

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeOutput {
    pub means: Vec<[f64; 2]>,
    pub labels: LabelMatrix,
    /// Weights over the anchored structures, in input order.
    pub weights: MixtureWeights,
    /// Uniform (CVB₁) or weighted (CVB₃) averages of per-structure ELBOs are heuristic.
    pub elbo: f64,
    pub elbo_heuristic: bool,
}

fn check(results: &[CvbAnchorResult]) -> Result<(usize, usize)> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidInput("no anchored structures".into()))?;
    let (k, n) = (first.q.k(), first.q.n());
    if results.iter().any(|r| r.q.k() != k || r.q.n() != n) {
        return Err(Error::InvalidInput("structures disagree on K or N".into()));
    }
    Ok((k, n))
}

fn weighted_means(results: &[CvbAnchorResult], w: &MixtureWeights) -> Result<Vec<[f64; 2]>> {
    let flat: Vec<Vec<f64>> = results
        .iter()
        .map(|r| r.means.iter().flatten().copied().collect())
        .collect();
    let m = mixture_moments(&flat, w)?;
    Ok(m.chunks(2).map(|c| [c[0], c[1]]).collect())
}

fn weighted_labels(results: &[CvbAnchorResult], w: &MixtureWeights, k: usize, n: usize) -> LabelMatrix {
    let mut col = vec![0.0; k];
    let labels = (0..n)
        .map(|i| {
            col.iter_mut().for_each(|v| *v = 0.0);
            for (r, &wj) in results.iter().zip(w.as_slice()) {
                if wj > 0.0 {
                    for (c, v) in col.iter_mut().enumerate() {
                        *v += wj * r.q.get(c, i);
                    }
                }
            }
            argmax(&col)
        })
        .collect();
    LabelMatrix::new(k, labels).expect("labels in range")
}

fn weighted_elbo(results: &[CvbAnchorResult], w: &MixtureWeights) -> f64 {
    results
        .iter()
        .zip(w.as_slice())
        .filter(|(_, &wj)| wj > 0.0)
        .map(|(r, &wj)| wj * r.elbo())
        .sum()
}

/// CVB₁: each anchor labels itself, means are the uniform average of `Υ̂(j)`.
///
/// Points that were not run as anchors (subsampled runs) take the argmax of the uniform
/// average of the anchors' label marginals.
pub fn scheme_cvb1(results: &[CvbAnchorResult]) -> Result<SchemeOutput> {
    let (k, n) = check(results)?;
    let w = MixtureWeights::uniform(results.len())?;
    let fallback = weighted_labels(results, &w, k, n);
    let mut labels = fallback.labels().to_vec();
    for r in results {
        labels[r.anchor] = argmax(r.q.column(r.anchor));
    }
    Ok(SchemeOutput {
        means: weighted_means(results, &w)?,
        labels: LabelMatrix::new(k, labels)?,
        elbo: weighted_elbo(results, &w),
        weights: w,
        elbo_heuristic: true,
    })
}

/// CVB₂: the structure with the largest ELBO (first one on ties).
pub fn scheme_cvb2(results: &[CvbAnchorResult]) -> Result<SchemeOutput> {
    check(results)?;
    let elbos: Vec<f64> = results.iter().map(|r| r.elbo()).collect();
    let best = argmax(&elbos);
    let r = &results[best];
    Ok(SchemeOutput {
        means: r.means.clone(),
        labels: r.q.argmax_labels(),
        weights: MixtureWeights::one_hot(results.len(), best)?,
        elbo: r.elbo(),
        elbo_heuristic: false,
    })
}

/// CVB₃: augmented mixture with `qⱼ* ∝ exp(ELBO(j))` under a uniform prior.
pub fn scheme_cvb3(results: &[CvbAnchorResult]) -> Result<SchemeOutput> {
    check(results)?;
    let neg: Vec<f64> = results.iter().map(|r| -r.elbo()).collect();
    let w = optimal_weights(&CandidateScore::uniform(&neg))?;
    scheme_cvb3_with_weights(results, &w)
}

/// The CVB₃ combiner with externally supplied weights.
pub fn scheme_cvb3_with_weights(results: &[CvbAnchorResult], w: &MixtureWeights) -> Result<SchemeOutput> {
    let (k, n) = check(results)?;
    if w.len() != results.len() {
        return Err(Error::DimensionMismatch {
            expected: results.len(),
            got: w.len(),
        });
    }
    let heuristic = w.as_slice().iter().filter(|&&x| x > 0.0).count() > 1;
    Ok(SchemeOutput {
        means: weighted_means(results, w)?,
        labels: weighted_labels(results, w, k, n),
        elbo: weighted_elbo(results, w),
        weights: w.clone(),
        elbo_heuristic: heuristic,
    })
}
