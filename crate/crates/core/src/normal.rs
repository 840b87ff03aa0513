//! Standard normal density and log-CDF evaluated without underflow.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(2π) / 2`
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `ln Φ` switches from `erfc` to the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = -30.0;

pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - HALF_LN_2PI
}

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `ln Φ(x)`.
///
/// * `x > 0`: `ln(1 - Φ(-x))` through `ln_1p`, exact to the last bits as `Φ → 1`.
/// * `-30 ≤ x ≤ 0`: `ln(erfc(-x/√2) / 2)`; `erfc` keeps full relative accuracy here.
/// * `x < -30`: Mills-ratio asymptotic series
///   `ln φ(x) - ln(-x) + ln(1 - 1/x² + 3/x⁴ - 15/x⁶ + …)`.
pub fn ln_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 0.0 {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else if x >= ASYMPTOTIC_THRESHOLD {
        (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        ln_pdf(x) - (-x).ln() + asymptotic_tail_series(x).ln()
    }
}

/// `Σ_k (-1)^k (2k-1)!! / x^{2k}` truncated after the terms stop mattering at |x| ≥ 30.
fn asymptotic_tail_series(x: f64) -> f64 {
    let inv_x2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=10 {
        term *= -((2 * k - 1) as f64) * inv_x2;
        sum += term;
    }
    sum
}

/// Inverse Mills ratio `φ(x) / Φ(x)`, finite for every finite `x`.
pub fn inverse_mills(x: f64) -> f64 {
    (ln_pdf(x) - ln_cdf(x)).exp()
}
