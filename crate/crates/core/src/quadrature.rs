//! Gauss-Legendre rules and a tensor-product integrator over the open unit square.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Outcome of a quadrature with an error estimate from halving the rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    /// False when `error_estimate` exceeds the requested tolerance.
    pub converged: bool,
}

/// Half-width of the logistic window: `σ(±36)` is within `3e-16` of the boundary.
pub const LOGIT_WINDOW: f64 = 36.0;

/// Integrate `g(t₁, t₂)` over the unit square through `u = σ(t)`, `t ∈ [-T, T]`.
///
/// `g` receives the logistic coordinates, so callers can map to quantiles without losing
/// the tails to rounding near `u = 1`. The Jacobian `σ'(t₁)σ'(t₂)` is applied here.
pub fn integrate_unit_square_logit<G>(n: usize, g: G) -> f64
where
    G: Fn(f64, f64) -> f64,
{
    let (x, w) = gauss_legendre(n);
    let t: Vec<f64> = x.iter().map(|&xi| LOGIT_WINDOW * xi).collect();
    let jac: Vec<f64> = t
        .iter()
        .zip(&w)
        .map(|(&ti, &wi)| {
            let s = logistic(ti);
            wi * LOGIT_WINDOW * s * logistic(-ti)
        })
        .collect();
    let mut total = 0.0;
    for (a, &ja) in t.iter().zip(&jac) {
        let mut row = 0.0;
        for (b, &jb) in t.iter().zip(&jac) {
            let v = g(*a, *b);
            if v != 0.0 {
                row += jb * v;
            }
        }
        total += ja * row;
    }
    total
}

/// Same integral at `n` and `n / 2` points; the difference is the error estimate.
pub fn integrate_with_estimate<G>(n: usize, tol: f64, g: G) -> Quadrature
where
    G: Fn(f64, f64) -> f64,
{
    let fine = integrate_unit_square_logit(n, &g);
    let coarse = integrate_unit_square_logit((n / 2).max(1), &g);
    let err = (fine - coarse).abs();
    Quadrature {
        value: fine,
        error_estimate: err,
        converged: err.is_finite() && err <= tol,
    }
}

#[inline]
pub fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules_match_tables() {
        let (x, w) = gauss_legendre(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15);
        let (x, w) = gauss_legendre(3);
        assert!(x[1].abs() < 1e-15);
        assert!((w[1] - 8.0 / 9.0).abs() < 1e-14);
        assert!((x[2] - 0.6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let n = 64;
        let (x, w) = gauss_legendre(n);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        // ∫ x^(2n-2) over [-1,1] = 2/(2n-1)
        let deg = 2 * n - 2;
        let s: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
        assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn unit_square_area_and_moment() {
        let area = integrate_unit_square_logit(256, |_, _| 1.0);
        assert!((area - 1.0).abs() < 1e-10, "{area}");
        let m = integrate_unit_square_logit(256, |a, b| logistic(a) * logistic(b));
        assert!((m - 0.25).abs() < 1e-10, "{m}");
    }
}
