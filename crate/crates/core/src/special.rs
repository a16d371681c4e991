//! Scalar special functions shared by the autodiff primitives and the
//! plain evaluators. Every value computed on a tape goes through these, so
//! tape and plain evaluation agree bit for bit.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(sqrt(2π))`
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF, `0.5·erfc(−z/√2)`.
#[inline]
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] on `t > 0`: `log(e^t − 1)`.
///
/// Returns NaN for `t <= 0`; callers validate the domain.
#[inline]
pub fn softplus_inverse(t: f64) -> f64 {
    if t > 36.0 {
        // e^{-t} < 2.4e-16: expm1 would lose the correction entirely
        t + (-(-t).exp()).ln_1p()
    } else {
        t.exp_m1().ln()
    }
}

/// `log |d softplus⁻¹(t) / dt| = −log(1 − e^{−t})`.
#[inline]
pub fn log_softplus_inverse_jacobian(t: f64) -> f64 {
    // e^{-t} rounds to 1 for t below ~1e-16, so switch forms near zero
    if t < std::f64::consts::LN_2 {
        -(-(-t).exp_m1()).ln()
    } else {
        -(-(-t).exp()).ln_1p()
    }
}

/// Numerically stable `log Σ exp(x_i)`. Empty input gives −∞.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Φ(1) from erf(1/√2)
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-16);
        assert!(normal_cdf(-40.0) < 1e-300);
    }

    #[test]
    fn softplus_round_trip() {
        for &y in &[-30.0, -5.0, -1.0, 0.0, 0.5, 1.0, 10.0, 35.0, 37.0, 100.0] {
            let t = softplus(y);
            let back = softplus_inverse(t);
            assert!((back - y).abs() <= 1e-12 * y.abs().max(1.0), "{y} -> {t} -> {back}");
        }
        assert_eq!(softplus_inverse(2f64.ln()), 0.0);
    }

    #[test]
    fn jacobian_near_zero_and_far() {
        // −log(1 − e^{−t}) ≈ −log t for tiny t
        assert!((log_softplus_inverse_jacobian(1e-20) - 20.0 * 10f64.ln()).abs() < 1e-12);
        assert!((log_softplus_inverse_jacobian(2f64.ln()) - 2f64.ln()).abs() < 1e-15);
        let t: f64 = 0.69;
        assert!((log_softplus_inverse_jacobian(t) + (1.0 - (-t).exp()).ln()).abs() < 1e-14);
        assert!(log_softplus_inverse_jacobian(50.0).abs() < 1e-20);
    }

    #[test]
    fn logsumexp_is_stable() {
        assert!((logsumexp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY, 0.0]), 0.0);
    }
}
