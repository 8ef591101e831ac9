//! Mixtures over candidate approximations.
//!
//! Given candidates with prior weights `pᵢ` and scores `KLᵢ` (or negative ELBOs, which
//! differ from the KLs by the shared log evidence and so give the same weights), the
//! weights `wᵢ ∝ pᵢ exp(−KLᵢ)` minimise the augmented KL `Σ wᵢ KLᵢ + Σ wᵢ ln(wᵢ/pᵢ)`,
//! an upper bound on the KL of the mixture.

use crate::error::{Error, Result};
use crate::numeric::logsumexp;

/// Nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    /// Validates nonnegativity and a unit sum within `1e-12`.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {s}, not 1")));
        }
        Ok(Self(w))
    }

    /// Normalise arbitrary nonnegative weights.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput("weights have no positive finite mass".into()));
        }
        Self::new(w.into_iter().map(|x| x / s).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn one_hot(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::InvalidInput(format!("index {i} out of {n}")));
        }
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// A candidate's score (lower is better) and prior weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CandidateScore {
    pub kl_or_neg_elbo: f64,
    pub prior_weight: f64,
}

impl CandidateScore {
    pub fn new(kl_or_neg_elbo: f64, prior_weight: f64) -> Self {
        Self {
            kl_or_neg_elbo,
            prior_weight,
        }
    }

    /// Uniform-prior candidates from a list of scores.
    pub fn uniform(scores: &[f64]) -> Vec<Self> {
        let p = 1.0 / scores.len() as f64;
        scores.iter().map(|&s| Self::new(s, p)).collect()
    }
}

fn log_terms(scores: &[CandidateScore]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no candidates".into()));
    }
    let psum: f64 = scores.iter().map(|s| s.prior_weight).sum();
    if scores.iter().any(|s| !(s.prior_weight >= 0.0)) || (psum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "prior weights must be nonnegative and sum to 1 (sum {psum})"
        )));
    }
    if scores.iter().any(|s| s.kl_or_neg_elbo.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    Ok(scores
        .iter()
        .map(|s| {
            if s.prior_weight == 0.0 || s.kl_or_neg_elbo == f64::INFINITY {
                f64::NEG_INFINITY
            } else {
                s.prior_weight.ln() - s.kl_or_neg_elbo
            }
        })
        .collect())
}

/// `wᵢ ∝ pᵢ exp(−KLᵢ)` via max-shifted log-sum-exp. Infinite scores get weight exactly zero.
pub fn optimal_weights(scores: &[CandidateScore]) -> Result<MixtureWeights> {
    let lt = log_terms(scores)?;
    let lse = logsumexp(&lt);
    if !lse.is_finite() {
        return Err(Error::NoFiniteScore);
    }
    let w: Vec<f64> = lt
        .iter()
        .map(|&l| if l == f64::NEG_INFINITY { 0.0 } else { (l - lse).exp() })
        .collect();
    // Renormalise away the last ulp so the unit-sum invariant holds tightly.
    let s: f64 = w.iter().sum();
    Ok(MixtureWeights(w.into_iter().map(|x| x / s).collect()))
}

/// Augmented KL `Σ wᵢ KLᵢ + Σ wᵢ ln(wᵢ/pᵢ)`, with `0·(·) = 0` for zero-weight terms.
///
/// The log term is `KL(w‖p)`; with `ln(pᵢ/wᵢ)` instead, the optimal weights would not
/// minimise the bound and its minimum would not be `−ln Σ pᵢ exp(−KLᵢ)`.
pub fn kl_upper_bound(scores: &[CandidateScore], weights: &MixtureWeights) -> Result<f64> {
    if scores.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            got: weights.len(),
        });
    }
    let mut b = 0.0;
    for (s, &w) in scores.iter().zip(weights.as_slice()) {
        if w == 0.0 {
            continue;
        }
        if s.prior_weight == 0.0 {
            return Ok(f64::INFINITY);
        }
        b += w * s.kl_or_neg_elbo + w * (w / s.prior_weight).ln();
    }
    Ok(b)
}

/// Closed form of the bound at the optimal weights: `−ln Σ pᵢ exp(−KLᵢ)`.
pub fn optimal_bound(scores: &[CandidateScore]) -> Result<f64> {
    Ok(-logsumexp(&log_terms(scores)?))
}

/// The best single-candidate bound `minᵢ KLᵢ` and its index (lowest on ties).
pub fn best_single(scores: &[CandidateScore]) -> Result<(usize, f64)> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no candidates".into()));
    }
    let v: Vec<f64> = scores.iter().map(|s| s.kl_or_neg_elbo).collect();
    let i = crate::numeric::argmin(&v);
    Ok((i, v[i]))
}

/// `Σ wᵢ momentᵢ`.
pub fn mixture_moments(component_moments: &[Vec<f64>], weights: &MixtureWeights) -> Result<Vec<f64>> {
    crate::divergence::weighted_mean(component_moments, weights)
}
