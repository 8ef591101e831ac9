//! Clustering with `K` isotropic unit-covariance Gaussian clusters, a flat prior on the
//! means and a uniform prior on the labels.
//!
//! Every `γ`, `ω̃` and `ζ` is handled in the log domain. The additive constant
//! `−ln(ζ K^N)` shared by all algorithms (and by the [`crate::oracle`]) is dropped, so
//! ELBOs are reported modulo that constant.

mod cvb;
mod hard;
mod metrics;
mod run;
mod schemes;
mod soft;
mod stats;

pub use cvb::{cvb_marginal_estimates, cvb_run, cvb_run_with, CvbAnchorResult, CvbStructure, CvbStructureState};
pub use hard::{em1_run, kmeans_run, HardAssign, HardResult};
pub use metrics::{mse_means, purity};
pub use run::{evaluate, Algorithm, MethodResult};
pub use schemes::{scheme_cvb1, scheme_cvb2, scheme_cvb3, scheme_cvb3_with_weights, SchemeOutput};
pub use soft::{em2_run, vb_run, SoftAssign, SoftResult};
pub use stats::{bregman_identity_residual, posterior_stats, ClusterStats};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// Observations `x₁…x_N` in the plane and the number of clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSet {
    pub x: Vec<[f64; 2]>,
    pub k: usize,
}

impl DataSet {
    pub fn new(x: Vec<[f64; 2]>, k: usize) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidInput("data set needs at least one point".into()));
        }
        if k == 0 {
            return Err(Error::InvalidInput("need at least one cluster".into()));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite observation".into()));
        }
        Ok(Self { x, k })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// Hard assignment: a one-hot `K × N` matrix stored as the index of the hot entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMatrix {
    k: usize,
    labels: Vec<usize>,
}

impl LabelMatrix {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!("label {bad} out of range for K = {k}")));
        }
        Ok(Self { k, labels })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Entry `(k, i)` of the boolean matrix.
    pub fn get(&self, k: usize, i: usize) -> bool {
        self.labels[i] == k
    }

    pub fn to_soft(&self) -> SoftLabelMatrix {
        let mut p = vec![0.0; self.k * self.n()];
        for (i, &l) in self.labels.iter().enumerate() {
            p[i * self.k + l] = 1.0;
        }
        SoftLabelMatrix { k: self.k, p }
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// Soft assignment: a `K × N` matrix with unit column sums, stored column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftLabelMatrix {
    k: usize,
    p: Vec<f64>,
}

impl SoftLabelMatrix {
    /// Columns must be nonnegative and sum to one within `1e-12`.
    pub fn new(k: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let mut p = Vec::with_capacity(k * columns.len());
        for (i, c) in columns.iter().enumerate() {
            if c.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: c.len(),
                });
            }
            let s: f64 = c.iter().sum();
            if c.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("column {i} is not a distribution")));
            }
            p.extend_from_slice(c);
        }
        Ok(Self { k, p })
    }

    pub(crate) fn into_raw(self) -> Vec<f64> {
        self.p
    }

    pub(crate) fn from_raw(k: usize, p: Vec<f64>) -> Self {
        debug_assert_eq!(p.len() % k, 0);
        Self { k, p }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.p.len() / self.k
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.p[i * self.k..(i + 1) * self.k]
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.p[i * self.k + k]
    }

    /// Largest column-sum deviation from one.
    pub fn max_column_error(&self) -> f64 {
        (0..self.n())
            .map(|i| (self.column(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Per-point argmax, lowest index on ties.
    pub fn argmax_labels(&self) -> LabelMatrix {
        LabelMatrix {
            k: self.k,
            labels: (0..self.n()).map(|i| crate::numeric::argmax(self.column(i))).collect(),
        }
    }
}

/// Starting means and variances shared by every algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct Init {
    pub means: Vec<[f64; 2]>,
    pub s2: Vec<f64>,
}

impl Init {
    /// Means on the circle of radius √2 starting at `(−1, 1)` and going clockwise,
    /// unit variances. For `K = 4` the means are the corners `(∓1, ±1)`.
    pub fn corners(k: usize) -> Self {
        Self {
            means: upsilon0(k),
            s2: vec![1.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }
}

/// Cluster directions: column `k` is `√2 (cos t_k, sin t_k)`, `t_k = 3π/4 − 2πk/K`,
/// snapped to a 1e-12 grid so `K = 4` gives exact ±1 entries.
pub fn upsilon0(k: usize) -> Vec<[f64; 2]> {
    use std::f64::consts::{PI, SQRT_2};
    let snap = |v: f64| (v * 1e12).round() / 1e12;
    (0..k)
        .map(|i| {
            let t = 3.0 * PI / 4.0 - 2.0 * PI * i as f64 / k as f64;
            [snap(SQRT_2 * t.cos()), snap(SQRT_2 * t.sin())]
        })
        .collect()
}

/// True means `Υ₀ R + 1`.
pub fn true_means(k: usize, radius: f64) -> Vec<[f64; 2]> {
    upsilon0(k)
        .into_iter()
        .map(|[a, b]| [a * radius + 1.0, b * radius + 1.0])
        .collect()
}

/// A simulated instance with its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub data: DataSet,
    pub truth: LabelMatrix,
    pub means: Vec<[f64; 2]>,
}

/// Draw `n` points: for each, a uniform cluster `k` then `x = μ_k + (z₁, z₂)`.
pub fn generate_data(k: usize, radius: f64, n: usize, stream: &mut Stream) -> Result<Generated> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidInput(format!("radius must be nonnegative, got {radius}")));
    }
    if k == 0 || n == 0 {
        return Err(Error::InvalidInput("need K ≥ 1 and N ≥ 1".into()));
    }
    let means = true_means(k, radius);
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let l = stream.category(k);
        let z1 = stream.normal();
        let z2 = stream.normal();
        x.push([means[l][0] + z1, means[l][1] + z2]);
        labels.push(l);
    }
    Ok(Generated {
        data: DataSet::new(x, k)?,
        truth: LabelMatrix::new(k, labels)?,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corners_for_four_clusters() {
        assert_eq!(upsilon0(4), vec![[-1.0, 1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]]);
        assert_eq!(upsilon0(2), vec![[-1.0, 1.0], [1.0, -1.0]]);
    }

    #[test]
    fn true_means_examples() {
        assert_eq!(true_means(4, 0.0), vec![[1.0, 1.0]; 4]);
        assert_eq!(
            true_means(4, 4.0),
            vec![[-3.0, 5.0], [5.0, 5.0], [5.0, -3.0], [-3.0, -3.0]]
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_data(4, 2.0, 50, &mut Stream::new(9, 1)).unwrap();
        let b = generate_data(4, 2.0, 50, &mut Stream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        let c = generate_data(4, 3.0, 50, &mut Stream::new(9, 1)).unwrap();
        // Same stream: labels agree, points differ only through the means.
        assert_eq!(a.truth, c.truth);
    }

    #[test]
    fn label_matrix_views() {
        let l = LabelMatrix::new(3, vec![2, 0, 2]).unwrap();
        assert!(l.get(2, 0) && !l.get(0, 0));
        assert_eq!(l.counts(), vec![1, 0, 2]);
        let s = l.to_soft();
        assert_eq!(s.column(1), &[1.0, 0.0, 0.0]);
        assert_eq!(s.argmax_labels(), l);
        assert!(LabelMatrix::new(2, vec![2]).is_err());
        assert!(SoftLabelMatrix::new(2, vec![vec![0.5, 0.6]]).is_err());
    }
}
