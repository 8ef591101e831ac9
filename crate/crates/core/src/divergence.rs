//! Bregman divergences and KL divergences.
//!
//! `D_φ(α‖β) = φ(α) − φ(β) − ⟨α − β, ∇φ(β)⟩` for the two potentials used downstream:
//! the squared norm (giving squared Euclidean distance) and negative entropy
//! `Σ x ln x` (giving the extended KL `Σ α ln(α/β) − Σ α + Σ β`).

use crate::augment::MixtureWeights;
use crate::error::{Error, Result};
use crate::numeric::xlogx;

/// Coordinates below this are treated as exact zeros under negative entropy.
pub const ZERO_GUARD: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    /// `φ(x) = ‖x‖²`.
    SquaredNorm,
    /// `φ(x) = Σ xᵢ ln xᵢ` on the nonnegative orthant.
    NegativeEntropy,
}

impl Potential {
    /// `φ(x)`. Errors outside the domain.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Potential::SquaredNorm => {
                check_finite(x)?;
                Ok(x.iter().map(|v| v * v).sum())
            }
            Potential::NegativeEntropy => {
                check_nonnegative(x)?;
                Ok(x.iter().map(|&v| xlogx(guard(v))).sum())
            }
        }
    }

    /// `∇φ(x)`. Negative entropy needs every coordinate strictly positive.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Potential::SquaredNorm => {
                check_finite(x)?;
                Ok(x.iter().map(|v| 2.0 * v).collect())
            }
            Potential::NegativeEntropy => {
                check_nonnegative(x)?;
                if let Some(i) = x.iter().position(|&v| v < ZERO_GUARD) {
                    return Err(Error::Domain(format!(
                        "negative-entropy gradient undefined at zero coordinate {i}"
                    )));
                }
                Ok(x.iter().map(|v| v.ln() + 1.0).collect())
            }
        }
    }
}

#[inline]
fn guard(v: f64) -> f64 {
    if v < ZERO_GUARD {
        0.0
    } else {
        v
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("coordinate {i} is not finite"))),
        None => Ok(()),
    }
}

fn check_nonnegative(x: &[f64]) -> Result<()> {
    check_finite(x)?;
    match x.iter().position(|&v| v < 0.0) {
        Some(i) => Err(Error::Domain(format!("negative coordinate {i} under negative entropy"))),
        None => Ok(()),
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("empty vector".into()));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `D_φ(α‖β)`.
///
/// Negative entropy is evaluated in the algebraically equivalent form
/// `Σ α ln(α/β) − α + β` to avoid cancellation; it is clamped at zero.
pub fn bregman(phi: Potential, alpha: &[f64], beta: &[f64]) -> Result<f64> {
    check_dims(alpha, beta)?;
    match phi {
        Potential::SquaredNorm => {
            check_finite(alpha)?;
            check_finite(beta)?;
            Ok(alpha.iter().zip(beta).map(|(a, b)| (a - b) * (a - b)).sum())
        }
        Potential::NegativeEntropy => {
            check_nonnegative(alpha)?;
            phi.gradient(beta)?;
            let d: f64 = alpha
                .iter()
                .zip(beta)
                .map(|(&a, &b)| {
                    let a = guard(a);
                    let t = if a > 0.0 { a * (a / b).ln() } else { 0.0 };
                    t - a + b
                })
                .sum();
            Ok(d.max(0.0))
        }
    }
}

/// `D(a‖b) + D(b‖c) − D(a‖c) − ⟨b − a, ∇φ(b) − ∇φ(c)⟩`, identically zero in exact arithmetic.
pub fn three_point_residual(phi: Potential, a: &[f64], b: &[f64], c: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    check_dims(a, c)?;
    let gb = phi.gradient(b)?;
    let gc = phi.gradient(c)?;
    let diff: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let gdiff: Vec<f64> = gb.iter().zip(&gc).map(|(x, y)| x - y).collect();
    Ok(bregman(phi, a, b)? + bregman(phi, b, c)? - bregman(phi, a, c)? - dot(&diff, &gdiff))
}

/// `E[x]` under the weights.
pub fn weighted_mean(points: &[Vec<f64>], weights: &MixtureWeights) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: weights.len(),
        });
    }
    let d = points[0].len();
    let mut m = vec![0.0; d];
    for (x, &w) in points.iter().zip(weights.as_slice()) {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        for (mi, xi) in m.iter_mut().zip(x) {
            *mi += w * xi;
        }
    }
    Ok(m)
}

/// Bregman variance `E[φ(x)] − φ(E[x])`, nonnegative by Jensen.
pub fn bregman_variance(phi: Potential, points: &[Vec<f64>], weights: &MixtureWeights) -> Result<f64> {
    let mean = weighted_mean(points, weights)?;
    let mut e_phi = 0.0;
    for (x, &w) in points.iter().zip(weights.as_slice()) {
        e_phi += w * phi.value(x)?;
    }
    Ok(e_phi - phi.value(&mean)?)
}

/// `Σᵢ pᵢ D(xᵢ‖y)`.
pub fn expected_divergence(phi: Potential, points: &[Vec<f64>], weights: &MixtureWeights, y: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for (x, &w) in points.iter().zip(weights.as_slice()) {
        if w > 0.0 {
            s += w * bregman(phi, x, y)?;
        }
    }
    Ok(s)
}

/// Index of the candidate minimising `Σᵢ pᵢ D(xᵢ‖·)`, lowest index on ties.
pub fn weighted_minimizer(
    phi: Potential,
    points: &[Vec<f64>],
    weights: &MixtureWeights,
    candidates: &[Vec<f64>],
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidInput("no candidates".into()));
    }
    let scores = candidates
        .iter()
        .map(|c| expected_divergence(phi, points, weights, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::numeric::argmin(&scores))
}

/// True iff the mixture mean attains the minimum of `Σᵢ pᵢ D(xᵢ‖·)` against every candidate.
///
/// The objective at `E[x]` is evaluated directly, so the candidate list need not contain it
/// bit-for-bit. A relative slack of `1e-12` absorbs rounding.
pub fn mixture_is_minimizer_check(
    phi: Potential,
    points: &[Vec<f64>],
    weights: &MixtureWeights,
    candidates: &[Vec<f64>],
) -> bool {
    let Ok(mean) = weighted_mean(points, weights) else {
        return false;
    };
    let Ok(at_mean) = expected_divergence(phi, points, weights, &mean) else {
        return false;
    };
    candidates
        .iter()
        .all(|c| match expected_divergence(phi, points, weights, c) {
            Ok(v) => at_mean <= v + 1e-12 * (1.0 + v.abs()),
            // Candidates outside the domain cannot beat the mean.
            Err(_) => true,
        })
}

/// True iff the posterior mean minimises the expected squared error over the candidates.
pub fn posterior_mean_mse_check(samples: &[(Vec<f64>, f64)], candidates: &[Vec<f64>]) -> bool {
    let (points, w): (Vec<Vec<f64>>, Vec<f64>) = samples.iter().cloned().unzip();
    let Ok(weights) = MixtureWeights::new(w) else {
        return false;
    };
    mixture_is_minimizer_check(Potential::SquaredNorm, &points, &weights, candidates)
}

/// Outcome of a discrete KL evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kl {
    pub value: f64,
    /// Set when `p` puts mass where `q` has none; `value` is then `+inf`.
    pub support_violation: bool,
}

/// `Σ p ln(p/q)` with `0 ln 0 = 0`. Lengths must agree; inputs must be nonnegative.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<Kl> {
    check_dims(p, q)?;
    check_nonnegative(p)?;
    check_nonnegative(q)?;
    let mut s = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let pi = guard(pi);
        if pi == 0.0 {
            continue;
        }
        let qi = guard(qi);
        if qi == 0.0 {
            return Ok(Kl {
                value: f64::INFINITY,
                support_violation: true,
            });
        }
        s += pi * (pi / qi).ln();
    }
    Ok(Kl {
        value: s.max(0.0),
        support_violation: false,
    })
}

/// Univariate Gaussian `N(mean, sd²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian1D {
    pub mean: f64,
    pub sd: f64,
}

/// Isotropic bivariate Gaussian `N(mean, sd² I₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian2DIso {
    pub mean: [f64; 2],
    pub sd: f64,
}

/// Bivariate Gaussian with scales `sd` and correlation `rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BivariateGaussian {
    pub mean: [f64; 2],
    pub sd: [f64; 2],
    pub rho: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        let g = Self { mean, sd };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd.is_finite() && self.mean.is_finite()) {
            return Err(Error::Domain(format!("invalid 1-D Gaussian {self:?}")));
        }
        Ok(())
    }
}

impl Gaussian2DIso {
    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd.is_finite() && self.mean.iter().all(|m| m.is_finite())) {
            return Err(Error::Domain(format!("invalid isotropic Gaussian {self:?}")));
        }
        Ok(())
    }
}

impl BivariateGaussian {
    pub fn new(mean: [f64; 2], sd: [f64; 2], rho: f64) -> Result<Self> {
        let g = Self { mean, sd, rho };
        g.validate()?;
        Ok(g)
    }

    pub fn zero_mean(sd1: f64, sd2: f64, rho: f64) -> Result<Self> {
        Self::new([0.0, 0.0], [sd1, sd2], rho)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sd.iter().all(|&s| s > 0.0 && s.is_finite())
            && self.mean.iter().all(|m| m.is_finite())
            && self.rho.abs() < 1.0;
        if !ok {
            return Err(Error::Domain(format!("invalid bivariate Gaussian {self:?}")));
        }
        Ok(())
    }

    /// `[Σ₁₁, Σ₁₂, Σ₂₂]`.
    pub fn cov(&self) -> [f64; 3] {
        let [a, b] = self.sd;
        [a * a, self.rho * a * b, b * b]
    }

    pub fn marginal(&self, k: usize) -> Gaussian1D {
        Gaussian1D {
            mean: self.mean[k],
            sd: self.sd[k],
        }
    }

    pub fn log_pdf(&self, x: [f64; 2]) -> f64 {
        let z1 = (x[0] - self.mean[0]) / self.sd[0];
        let z2 = (x[1] - self.mean[1]) / self.sd[1];
        let r = self.rho;
        let one_r2 = 1.0 - r * r;
        -crate::numeric::LN_2PI
            - self.sd[0].ln()
            - self.sd[1].ln()
            - 0.5 * one_r2.ln()
            - (z1 * z1 - 2.0 * r * z1 * z2 + z2 * z2) / (2.0 * one_r2)
    }
}

/// Any member of the Gaussian families handled by [`kl_gauss`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gaussian {
    D1(Gaussian1D),
    Iso2(Gaussian2DIso),
    Bivariate(BivariateGaussian),
}

impl Gaussian {
    pub fn dim(&self) -> usize {
        match self {
            Gaussian::D1(_) => 1,
            _ => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Gaussian::D1(g) => g.validate(),
            Gaussian::Iso2(g) => g.validate(),
            Gaussian::Bivariate(g) => g.validate(),
        }
    }

    /// Mean and `[Σ₁₁, Σ₁₂, Σ₂₂]` for the 2-D families.
    fn moments2(&self) -> ([f64; 2], [f64; 3]) {
        match *self {
            Gaussian::Iso2(g) => (g.mean, [g.sd * g.sd, 0.0, g.sd * g.sd]),
            Gaussian::Bivariate(g) => (g.mean, g.cov()),
            Gaussian::D1(_) => unreachable!("1-D Gaussian has no 2-D moments"),
        }
    }
}

impl From<Gaussian1D> for Gaussian {
    fn from(g: Gaussian1D) -> Self {
        Gaussian::D1(g)
    }
}

impl From<Gaussian2DIso> for Gaussian {
    fn from(g: Gaussian2DIso) -> Self {
        Gaussian::Iso2(g)
    }
}

impl From<BivariateGaussian> for Gaussian {
    fn from(g: BivariateGaussian) -> Self {
        Gaussian::Bivariate(g)
    }
}

/// `KL(p‖q)` between Gaussians, expectation under `p`.
pub fn kl_gauss(p: &Gaussian, q: &Gaussian) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    if let (Gaussian::D1(a), Gaussian::D1(b)) = (p, q) {
        return Ok(kl_gauss_1d(a, b));
    }
    let (mp, sp) = p.moments2();
    let (mq, sq) = q.moments2();
    let det_p = sp[0] * sp[2] - sp[1] * sp[1];
    let det_q = sq[0] * sq[2] - sq[1] * sq[1];
    // Σ_q⁻¹ = [sq2, −sq1; −sq1, sq0] / det_q
    let tr = (sq[2] * sp[0] - 2.0 * sq[1] * sp[1] + sq[0] * sp[2]) / det_q;
    let d = [mq[0] - mp[0], mq[1] - mp[1]];
    let maha = (sq[2] * d[0] * d[0] - 2.0 * sq[1] * d[0] * d[1] + sq[0] * d[1] * d[1]) / det_q;
    Ok((0.5 * (tr + maha - 2.0 + (det_q / det_p).ln())).max(0.0))
}

pub fn kl_gauss_1d(p: &Gaussian1D, q: &Gaussian1D) -> f64 {
    let r = p.sd / q.sd;
    let d = (p.mean - q.mean) / q.sd;
    (0.5 * (r * r + d * d - 1.0) - r.ln()).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> MixtureWeights {
        MixtureWeights::new(v.to_vec()).unwrap()
    }

    #[test]
    fn bregman_examples() {
        let sq = Potential::SquaredNorm;
        assert_eq!(bregman(sq, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(bregman(sq, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let eps = 1e-12;
        let d = bregman(Potential::NegativeEntropy, &[1.0, eps], &[0.5, 0.5]).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-9, "{d}");
        let d0 = bregman(Potential::NegativeEntropy, &[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d0 - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bregman_rejects_domain_violations() {
        let ne = Potential::NegativeEntropy;
        assert!(matches!(bregman(ne, &[-0.1, 1.0], &[0.5, 0.5]), Err(Error::Domain(_))));
        assert!(matches!(bregman(ne, &[0.5, 0.5], &[0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(
            bregman(ne, &[0.5], &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn three_point_examples() {
        let sq = Potential::SquaredNorm;
        assert_eq!(three_point_residual(sq, &[3.0], &[3.0], &[3.0]).unwrap(), 0.0);
        assert_eq!(three_point_residual(sq, &[0.0], &[1.0], &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn bregman_variance_examples() {
        let sq = Potential::SquaredNorm;
        assert_eq!(bregman_variance(sq, &[vec![4.0, 1.0]], &w(&[1.0])).unwrap(), 0.0);
        let v = bregman_variance(sq, &[vec![0.0], vec![2.0]], &w(&[0.5, 0.5])).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert!(bregman_variance(sq, &[], &w(&[1.0])).is_err());
    }

    #[test]
    fn minimizer_examples() {
        let sq = Potential::SquaredNorm;
        let pts = vec![vec![0.0], vec![2.0]];
        let cands = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(weighted_minimizer(sq, &pts, &w(&[0.5, 0.5]), &cands).unwrap(), 1);
        assert!(mixture_is_minimizer_check(sq, &pts, &w(&[0.5, 0.5]), &cands));
        assert!(mixture_is_minimizer_check(sq, &pts, &w(&[0.5, 0.5]), &[vec![1.0]]));
        assert!(posterior_mean_mse_check(&[(vec![3.0], 1.0)], &[vec![3.0], vec![2.5]]));
        assert!(posterior_mean_mse_check(&[(vec![0.0], 0.5), (vec![2.0], 0.5)], &cands));
    }

    #[test]
    fn kl_discrete_examples() {
        let p = [0.2, 0.3, 0.5];
        assert_eq!(kl_discrete(&p, &p).unwrap().value, 0.0);
        let k = kl_discrete(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((k.value - 2f64.ln()).abs() < 1e-15 && !k.support_violation);
        let k = kl_discrete(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!(k.value.is_infinite() && k.support_violation);
    }

    #[test]
    fn kl_gauss_examples() {
        let a = Gaussian::from(BivariateGaussian::zero_mean(2.0, 1.0, 0.8).unwrap());
        assert_eq!(kl_gauss(&a, &a).unwrap(), 0.0);
        let vb = Gaussian::from(BivariateGaussian::zero_mean(1.2, 0.6, 0.0).unwrap());
        let k = kl_gauss(&vb, &a).unwrap();
        assert!((k - (-0.5 * 0.36f64.ln())).abs() < 1e-12, "{k}");
        let one = Gaussian::from(Gaussian1D::new(0.0, 1.0).unwrap());
        assert!(matches!(kl_gauss(&one, &a), Err(Error::DimensionMismatch { .. })));
        let iso = Gaussian::from(Gaussian2DIso {
            mean: [0.0, 0.0],
            sd: 1.2,
        });
        let biv_iso = Gaussian::from(BivariateGaussian::zero_mean(1.2, 1.2, 0.0).unwrap());
        assert!(kl_gauss(&iso, &biv_iso).unwrap().abs() < 1e-15);
    }

    #[test]
    fn conditional_kl_term_matches_bracketed_expression() {
        // KL(N(β̃θ, σ̃²) ‖ N(βθ, σ²)) for fixed θ, written out by hand.
        let (bt, st, b, s, th): (f64, f64, f64, f64, f64) = (0.3, 0.7, 0.4, 0.6, 1.7);
        let p = Gaussian1D::new(bt * th, st).unwrap();
        let q = Gaussian1D::new(b * th, s).unwrap();
        let hand = (s / st).ln() + (st * st + ((bt - b) * th).powi(2)) / (2.0 * s * s) - 0.5;
        assert!((kl_gauss_1d(&p, &q) - hand).abs() < 1e-14);
    }
}
