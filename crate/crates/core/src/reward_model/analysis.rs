//! Closed-form optima and gradients of the per-step likelihood losses,
//! with `δ = r̃ - μ` held fixed.

use crate::error::{Error, Result};
use crate::normal;

/// Minimizer of `ln σ + δ²/(2σ²)` over `σ > 0`, which is `|δ|`.
pub fn optimal_sigma_gaussian(delta: f64) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be finite, got {delta}")));
    }
    if delta == 0.0 {
        return Err(Error::Degenerate(
            "delta = 0: the loss decreases without bound as sigma -> 0".into(),
        ));
    }
    Ok(delta.abs())
}

pub const SKEW_FIXED_POINT_MAX_ITERS: usize = 200;
const SKEW_DAMPING: f64 = 0.5;

/// Right-hand side of the skew-normal scale fixed point,
/// `δ (-λγ + sqrt((λγ)² + 4)) / 2` with `γ = φ(λδ/σ)/Φ(λδ/σ)`.
pub fn skew_sigma_map(delta: f64, lambda: f64, sigma: f64) -> f64 {
    let lg = lambda * normal::inverse_mills(lambda * delta / sigma);
    delta * (-lg + (lg * lg + 4.0).sqrt()) / 2.0
}

/// Stationary scale of `ln σ + δ²/(2σ²) - ln Φ(λδ/σ)` for `δ > 0`, by damped
/// fixed-point iteration from `σ = δ`.
pub fn optimal_sigma_skew(delta: f64, lambda: f64, tol: f64) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    if !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(delta);
    }
    let mut sigma = delta;
    for _ in 0..SKEW_FIXED_POINT_MAX_ITERS {
        let next = (1.0 - SKEW_DAMPING) * sigma + SKEW_DAMPING * skew_sigma_map(delta, lambda, sigma);
        let step = (next - sigma).abs();
        sigma = next;
        if step < tol {
            return Ok(sigma);
        }
    }
    Err(Error::Convergence {
        iterations: SKEW_FIXED_POINT_MAX_ITERS,
        last: sigma,
    })
}

/// `(∂ℓ/∂μ, ∂ℓ/∂σ)` of the Gaussian per-step loss: `(-δ/σ², (σ² - δ²)/σ³)`.
pub fn analytic_grads_gaussian(delta: f64, sigma: f64) -> (f64, f64) {
    debug_assert!(sigma > 0.0);
    let s2 = sigma * sigma;
    (-delta / s2, (s2 - delta * delta) / (s2 * sigma))
}

/// `(∂ℓ/∂μ, ∂ℓ/∂σ)` of the skew-normal per-step loss.
pub fn analytic_grads_skew(delta: f64, sigma: f64, lambda: f64) -> (f64, f64) {
    debug_assert!(sigma > 0.0);
    let gamma = normal::inverse_mills(lambda * delta / sigma);
    let s2 = sigma * sigma;
    (
        -delta / s2 + lambda / sigma * gamma,
        1.0 / sigma - delta * delta / (s2 * sigma) + lambda * delta / s2 * gamma,
    )
}
