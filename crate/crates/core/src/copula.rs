//! Copula utilities: quantile transforms, the bivariate Gaussian copula, copula entropy,
//! and the split of a bivariate Gaussian KL into a copula part and marginal parts.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::divergence::{kl_gauss, kl_gauss_1d, BivariateGaussian, Gaussian, Gaussian1D};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_estimate, logistic, Quadrature};

/// Default points per axis for copula quadrature.
pub const DEFAULT_QUADRATURE_N: usize = 256;
/// Smallest accepted rule size for copula quadrature.
pub const MIN_QUADRATURE_N: usize = 64;
/// Tolerance under which a copula quadrature is reported as converged.
pub const QUADRATURE_TOL: f64 = 1e-3;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// `Φ⁻¹(u)` for `u ∈ [0, 1]`; the upper half goes through `−Φ⁻¹(1 − u)`.
pub fn probit(u: f64) -> f64 {
    let n = std_normal();
    if u <= 0.5 {
        n.inverse_cdf(u)
    } else {
        -n.inverse_cdf(1.0 - u)
    }
}

/// `Φ⁻¹(σ(t))` without forming `σ(t)` near 1.
pub fn probit_of_logistic(t: f64) -> f64 {
    let n = std_normal();
    if t <= 0.0 {
        n.inverse_cdf(logistic(t))
    } else {
        -n.inverse_cdf(logistic(-t))
    }
}

/// Right-continuous empirical CDF with jumps of `1/n` at the sorted samples.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empirical CDF needs samples".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidInput("NaN sample".into()));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        Ok(Self { sorted: samples })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&s| s <= x);
        count as f64 / self.sorted.len() as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }
}

/// A univariate CDF.
#[derive(Clone, Debug, PartialEq)]
pub enum Cdf1D {
    /// Uniform on `[lo, hi]`.
    Uniform {
        lo: f64,
        hi: f64,
    },
    Gaussian(Gaussian1D),
    Empirical(EmpiricalCdf),
}

impl Cdf1D {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Cdf1D::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Cdf1D::Gaussian(g) => std_normal().cdf((x - g.mean) / g.sd),
            Cdf1D::Empirical(e) => e.eval(x),
        }
    }
}

/// `inf{θ : F(θ) ≥ u}`. At `u = 0` every CDF here gives `−∞`.
pub fn pseudo_inverse(cdf: &Cdf1D, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidInput(format!("u = {u} outside [0, 1]")));
    }
    if u == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(match cdf {
        Cdf1D::Uniform { lo, hi } => lo + u * (hi - lo),
        Cdf1D::Gaussian(g) => g.mean + g.sd * probit(u),
        Cdf1D::Empirical(e) => {
            // Smallest sample index i with (i + 1)/n ≥ u.
            let n = e.sorted.len();
            let nf = n as f64;
            let mut i = ((u * nf).ceil() as usize).clamp(1, n) - 1;
            while i > 0 && (i as f64) / nf >= u {
                i -= 1;
            }
            while i + 1 < n && ((i + 1) as f64) / nf < u {
                i += 1;
            }
            e.sorted[i]
        }
    })
}

/// Bivariate Gaussian copula with correlation `rho`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianCopula {
    pub rho: f64,
}

impl GaussianCopula {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Domain(format!("copula correlation {rho} outside (-1, 1)")));
        }
        Ok(Self { rho })
    }

    /// `ln c` at normal scores `z`.
    pub fn log_density_z(&self, z1: f64, z2: f64) -> f64 {
        let r = self.rho;
        let one_r2 = 1.0 - r * r;
        -0.5 * one_r2.ln() - (r * r * (z1 * z1 + z2 * z2) - 2.0 * r * z1 * z2) / (2.0 * one_r2)
    }
}

/// `c(u) = φ₂,ρ(z) / (φ(z₁) φ(z₂))` with `z = Φ⁻¹(u)`. Boundary points are rejected.
pub fn gaussian_copula_density(cop: &GaussianCopula, u: [f64; 2]) -> Result<f64> {
    if u.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidInput(format!("copula argument {u:?} not interior")));
    }
    Ok(cop.log_density_z(probit(u[0]), probit(u[1])).exp())
}

/// Copula CDF values `values[a][b] = C(nodes[a], nodes[b])` on a square grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CopulaGrid {
    pub nodes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl CopulaGrid {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(nodes: Vec<f64>, c: F) -> Self {
        let values = nodes
            .iter()
            .map(|&a| nodes.iter().map(|&b| c(a, b)).collect())
            .collect();
        Self { nodes, values }
    }
}

/// True iff `max(0, u₁+u₂−1) ≤ C(u) ≤ min(u₁, u₂)` at every node (slack `1e-12`).
pub fn frechet_hoeffding_check(grid: &CopulaGrid) -> bool {
    const SLACK: f64 = 1e-12;
    if grid.values.len() != grid.nodes.len() {
        return false;
    }
    grid.nodes.iter().zip(&grid.values).all(|(&a, row)| {
        row.len() == grid.nodes.len()
            && grid.nodes.iter().zip(row).all(|(&b, &c)| {
                let lower = (a + b - 1.0).max(0.0);
                let upper = a.min(b);
                c >= lower - SLACK && c <= upper + SLACK
            })
    })
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_QUADRATURE_N {
        return Err(Error::InvalidInput(format!(
            "quadrature_n = {n} is below the minimum {MIN_QUADRATURE_N}"
        )));
    }
    Ok(())
}

/// Quadrature of the copula density over the unit square (should be 1).
pub fn integrate_copula_density(cop: &GaussianCopula, n: usize) -> Result<Quadrature> {
    check_n(n)?;
    Ok(integrate_with_estimate(n, QUADRATURE_TOL, |a, b| {
        cop.log_density_z(probit_of_logistic(a), probit_of_logistic(b)).exp()
    }))
}

/// `E_c[ln c]`, the mutual information of any joint with this copula.
pub fn mutual_info_copula_entropy(cop: &GaussianCopula, quadrature_n: usize) -> Result<Quadrature> {
    check_n(quadrature_n)?;
    Ok(integrate_with_estimate(quadrature_n, QUADRATURE_TOL, |a, b| {
        let l = cop.log_density_z(probit_of_logistic(a), probit_of_logistic(b));
        l.exp() * l
    }))
}

/// Result of splitting `KL(f‖f̃)` into copula and marginal parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CopulaKlDecomposition {
    /// Closed-form `KL(f‖f̃)`.
    pub kl_total: f64,
    /// `E_c ln[c(u) / c̃(F̃(F←(u)))]` by quadrature.
    pub kl_copula_term: f64,
    /// `KL(f_k‖f̃_k)` for each coordinate.
    pub kl_marginal_terms: [f64; 2],
    pub quadrature_error: f64,
    /// `kl_total − kl_copula_term − Σ kl_marginal_terms`.
    pub residual: f64,
    /// Quadrature converged and `|residual| ≤ QUADRATURE_TOL`.
    pub identity_holds: bool,
}

/// Compute both sides of the copula KL decomposition for two bivariate Gaussians.
pub fn kl_copula_decomposition_check(
    f: &BivariateGaussian,
    ftilde: &BivariateGaussian,
    quadrature_n: usize,
) -> Result<CopulaKlDecomposition> {
    check_n(quadrature_n)?;
    f.validate()?;
    ftilde.validate()?;
    let kl_total = kl_gauss(&Gaussian::from(*f), &Gaussian::from(*ftilde))?;
    let kl_marginal_terms = [
        kl_gauss_1d(&f.marginal(0), &ftilde.marginal(0)),
        kl_gauss_1d(&f.marginal(1), &ftilde.marginal(1)),
    ];
    let c = GaussianCopula::new(f.rho)?;
    let ct = GaussianCopula::new(ftilde.rho)?;
    // Score of θ_k = F_k←(u_k) under f̃'s k-th marginal.
    let rescale = |k: usize, z: f64| (f.mean[k] + f.sd[k] * z - ftilde.mean[k]) / ftilde.sd[k];
    let q = integrate_with_estimate(quadrature_n, QUADRATURE_TOL, |a, b| {
        let z1 = probit_of_logistic(a);
        let z2 = probit_of_logistic(b);
        let lc = c.log_density_z(z1, z2);
        let lct = ct.log_density_z(rescale(0, z1), rescale(1, z2));
        lc.exp() * (lc - lct)
    });
    let residual = kl_total - q.value - kl_marginal_terms[0] - kl_marginal_terms[1];
    Ok(CopulaKlDecomposition {
        kl_total,
        kl_copula_term: q.value,
        kl_marginal_terms,
        quadrature_error: q.error_estimate,
        residual,
        identity_holds: q.converged && residual.abs() <= QUADRATURE_TOL,
    })
}
