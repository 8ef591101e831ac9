//! Small numeric helpers shared by the models.

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `ln(2πe)`.
pub const LN_2PI_E: f64 = LN_2PI + 1.0;

/// Stable `ln Σ exp(xᵢ)`. Returns `-inf` for an empty slice or all `-inf` inputs.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Normalise log-weights in place into probabilities and return the log normaliser.
pub fn softmax_in_place(xs: &mut [f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        let lse = logsumexp(xs);
        let n = xs.len() as f64;
        xs.iter_mut().for_each(|x| *x = 1.0 / n);
        return lse;
    }
    let mut s = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in xs.iter_mut() {
        *x /= s;
    }
    m + s.ln()
}

/// `x ln x` with `0 ln 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Index of the largest value; ties resolve to the lowest index. NaNs are never selected
/// unless every entry is NaN.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] || (xs[best].is_nan() && !x.is_nan()) {
            best = i;
        }
    }
    best
}

/// Index of the smallest value, lowest index on ties.
pub fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x < xs[best] || (xs[best].is_nan() && !x.is_nan()) {
            best = i;
        }
    }
    best
}

#[inline]
pub fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Log density of `N(x; mu, I₂)`.
#[inline]
pub fn log_norm_iso(x: [f64; 2], mu: [f64; 2]) -> f64 {
    -LN_2PI - 0.5 * sq_dist(x, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_matches_naive_and_survives_large_values() {
        let xs = [0.1, -2.0, 1.5];
        let naive = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&xs) - naive).abs() < 1e-14);
        assert!((logsumexp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmin(&[2.0, 0.0, 0.0]), 1);
        assert_eq!(argmax(&[f64::NAN, 0.0]), 1);
    }

    #[test]
    fn constants() {
        assert!((LN_2PI - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-15);
        assert_eq!(xlogx(0.0), 0.0);
    }
}
