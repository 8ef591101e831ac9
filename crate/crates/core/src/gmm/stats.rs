use super::{DataSet, SoftLabelMatrix};
use crate::numeric::{log_norm_iso, sq_dist, LN_2PI};

/// Per-cluster posterior statistics from a (hard or soft) weighting.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterStats {
    /// `Σᵢ wₖᵢ xᵢ / Σᵢ wₖᵢ`; `NaN` for empty clusters.
    pub mu_bar: Vec<[f64; 2]>,
    /// `(Σᵢ wₖᵢ)^{-1/2}`; `+inf` for empty clusters. Variances are taken as
    /// `1 / weight_sum` directly rather than by squaring this.
    pub sigma_bar: Vec<f64>,
    /// `ln γₖ = ln(2π σ̄ₖ²) + Σᵢ wₖᵢ ln N(xᵢ; μ̄ₖ, I₂)`; `NaN` for empty clusters.
    pub log_gamma: Vec<f64>,
    pub weight_sum: Vec<f64>,
    /// Clusters with zero total weight. Callers carry their previous parameters.
    pub empty: Vec<bool>,
}

impl ClusterStats {
    pub fn any_empty(&self) -> bool {
        self.empty.iter().any(|&e| e)
    }
}

/// Weighted posterior mean, scale and log normaliser for every cluster.
pub fn posterior_stats(data: &DataSet, weights: &SoftLabelMatrix) -> ClusterStats {
    let k = weights.k();
    let mut sum = vec![0.0; k];
    let mut sx = vec![[0.0; 2]; k];
    for (i, x) in data.x.iter().enumerate() {
        for (c, &w) in weights.column(i).iter().enumerate() {
            sum[c] += w;
            sx[c][0] += w * x[0];
            sx[c][1] += w * x[1];
        }
    }
    let mut out = ClusterStats {
        mu_bar: vec![[f64::NAN; 2]; k],
        sigma_bar: vec![f64::INFINITY; k],
        log_gamma: vec![f64::NAN; k],
        weight_sum: sum.clone(),
        empty: vec![false; k],
    };
    for c in 0..k {
        if !(sum[c] > 0.0) {
            out.empty[c] = true;
            continue;
        }
        let mu = [sx[c][0] / sum[c], sx[c][1] / sum[c]];
        let fit: f64 = data
            .x
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let w = weights.get(c, i);
                if w > 0.0 {
                    w * log_norm_iso(x, mu)
                } else {
                    0.0
                }
            })
            .sum();
        out.mu_bar[c] = mu;
        out.sigma_bar[c] = sum[c].sqrt().recip();
        out.log_gamma[c] = LN_2PI - sum[c].ln() + fit;
    }
    out
}

/// `Σᵢ wᵢ‖xᵢ − μ‖² − Σᵢ wᵢ‖xᵢ − μ̄‖² − (Σᵢ wᵢ)‖μ − μ̄‖²`, zero up to rounding.
///
/// This is the Bregman variance decomposition for the squared norm applied to one cluster.
pub fn bregman_identity_residual(x: &[[f64; 2]], w: &[f64], mu: [f64; 2]) -> f64 {
    let s: f64 = w.iter().sum();
    if !(s > 0.0) {
        return 0.0;
    }
    let mut mb = [0.0; 2];
    for (xi, &wi) in x.iter().zip(w) {
        mb[0] += wi * xi[0];
        mb[1] += wi * xi[1];
    }
    mb = [mb[0] / s, mb[1] / s];
    let lhs: f64 = x.iter().zip(w).map(|(&xi, &wi)| wi * sq_dist(xi, mu)).sum();
    let within: f64 = x.iter().zip(w).map(|(&xi, &wi)| wi * sq_dist(xi, mb)).sum();
    lhs - within - s * sq_dist(mu, mb)
}
