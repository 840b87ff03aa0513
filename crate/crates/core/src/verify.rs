//! Machine checks of the analytical claims behind the reward model and the
//! diagnostics, each reported with its tolerance and worst observed value.
//!
//! The per-step losses are injected through [`Kernels`] so the suite can be
//! pointed at a deliberately broken loss and shown to catch it.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::diagnostics::{autocorr_ci, autocorr_report, lag1_autocorr, lag1_autocorr_pooled};
use crate::env::{make_env, EpisodicWrapper, ENV_NAMES};
use crate::nn::DenseNet;
use crate::numeric::{central_difference, golden_section_min};
use crate::reward_model::{
    analytic_grads_gaussian, analytic_grads_skew, gaussian_nll, mse_rd_loss, optimal_sigma_skew,
    skew_normal_nll, skew_sigma_map, trajectory_loss, trajectory_loss_with_noise, Family,
    NoiseTable, RewardDistributionParams, RewardModel, SigmaBounds, Trajectory,
};

/// Per-step losses as functions of `(δ, σ[, λ])`, with `μ = 0`.
#[derive(Clone, Copy)]
pub struct Kernels {
    pub gaussian: fn(f64, f64) -> f64,
    pub skew: fn(f64, f64, f64) -> f64,
}

fn library_gaussian(delta: f64, sigma: f64) -> f64 {
    gaussian_nll(
        delta,
        &RewardDistributionParams {
            mu: 0.0,
            sigma,
            lambda: None,
        },
    )
}

fn library_skew(delta: f64, sigma: f64, lambda: f64) -> f64 {
    skew_normal_nll(
        delta,
        &RewardDistributionParams {
            mu: 0.0,
            sigma,
            lambda: Some(lambda),
        },
    )
}

impl Default for Kernels {
    fn default() -> Self {
        Self {
            gaussian: library_gaussian,
            skew: library_skew,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub claim: &'static str,
    pub tolerance: f64,
    /// Worst-case error (or violation count) over the check's inputs.
    pub observed: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &'static str, claim: &'static str, tolerance: f64, observed: f64) -> Self {
        Self {
            name,
            claim,
            tolerance,
            observed,
            passed: observed <= tolerance,
        }
    }

    fn failed(name: &'static str, claim: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            claim,
            tolerance,
            observed: f64::INFINITY,
            passed: false,
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<32} observed {:>11.3e}  tolerance {:>9.1e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.observed,
            self.tolerance,
            self.claim
        )
    }
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_model<R: Rng>(family: Family, hidden: usize, rng: &mut R) -> RewardModel {
    let net = DenseNet::new(&[5, hidden, hidden, family.head_width()], rng).expect("valid sizes");
    RewardModel::from_net(family, net, SigmaBounds::default()).expect("head matches")
}

fn random_trajectory<R: Rng>(len: usize, rng: &mut R) -> Trajectory {
    let steps = (0..len)
        .map(|_| {
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            (s, a)
        })
        .collect();
    Trajectory::new(steps, rng.random_range(-5.0..5.0)).expect("valid trajectory")
}

/// Twice the fixed-σ trajectory loss equals the squared return residual.
pub fn mse_equivalence() -> CheckResult {
    const NAME: &str = "mse_equivalence";
    const CLAIM: &str = "2 x fixed-sigma LOO loss == (R - sum mu)^2, 50 random (theta, tau), T <= 20";
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let model = random_model(Family::FixedSigmaMse, 16, &mut r);
        let len = r.random_range(1..=20);
        let traj = random_trajectory(len, &mut r);
        let (Ok(tl), Ok(mse)) = (trajectory_loss(&model, &traj, &mut r), mse_rd_loss(&model, &traj)) else {
            return CheckResult::failed(NAME, CLAIM, 1e-12);
        };
        let err = (2.0 * tl.loss - mse).abs() / mse.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(err);
    }
    CheckResult::new(NAME, CLAIM, 1e-12, worst)
}

/// Grid argmin of the Gaussian loss in σ sits at `|δ|`; the result is in
/// grid cells.
pub fn gaussian_sigma_argmin(k: &Kernels) -> CheckResult {
    let cells = 20_000;
    let (lo, hi) = (1e-3f64, 1e2f64);
    let step = (hi / lo).ln() / cells as f64;
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let delta = r.random_range(0.01..10.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let best = (0..=cells)
            .map(|j| lo * (step * j as f64).exp())
            .min_by(|a, b| (k.gaussian)(delta, *a).total_cmp(&(k.gaussian)(delta, *b)))
            .expect("non-empty grid");
        worst = worst.max((best.ln() - delta.abs().ln()).abs() / step);
    }
    CheckResult::new(
        "gaussian_sigma_argmin",
        "grid argmin over sigma in [1e-3, 1e2] equals |delta| within one cell, 100 random delta",
        1.0,
        worst,
    )
}

/// `L(α) = ℓ(δ, α|δ|)` is minimized at `α = 1`.
pub fn reparameterized_alpha(k: &Kernels) -> CheckResult {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let delta: f64 = r.random_range(0.01..10.0);
        let alpha = golden_section_min(|a| (k.gaussian)(delta, a * delta), 0.05, 20.0, 1e-12);
        worst = worst.max((alpha - 1.0).abs());
    }
    CheckResult::new(
        "reparameterized_alpha",
        "golden-section argmin of log(a|delta|) + 1/(2a^2) is a = 1",
        1e-6,
        worst,
    )
}

/// Relative disagreement, measured against the largest term of the
/// analytic expression so that near-cancelling gradients are not divided
/// by zero.
fn rel_err(analytic: f64, numeric: f64, scale: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(scale)
}

/// Closed-form Gaussian gradients against central differences of the loss.
pub fn gaussian_gradients(k: &Kernels) -> CheckResult {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let delta = r.random_range(-5.0..5.0);
        let sigma = log_uniform(&mut r, 1e-2, 10.0);
        let (dm, ds) = analytic_grads_gaussian(delta, sigma);
        let h = 1e-5 * sigma;
        // ℓ depends on μ through δ = r̃ - μ
        let fd_mu = -central_difference(|d| (k.gaussian)(d, sigma), delta, h);
        let fd_sigma = central_difference(|s| (k.gaussian)(delta, s), sigma, h);
        let s2 = sigma * sigma;
        worst = worst
            .max(rel_err(dm, fd_mu, (delta.abs() / s2).max(1.0 / sigma)))
            .max(rel_err(ds, fd_sigma, 1.0 / sigma + delta * delta / (s2 * sigma)));
    }
    CheckResult::new(
        "gaussian_gradients",
        "analytic (d_mu, d_sigma) match central differences, 1000 draws, sigma in [1e-2, 10]",
        1e-6,
        worst,
    )
}

/// Closed-form skew-normal gradients against central differences.
pub fn skew_gradients(k: &Kernels) -> CheckResult {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let delta = r.random_range(-5.0..5.0);
        let sigma = log_uniform(&mut r, 1e-2, 10.0);
        let lambda = r.random_range(-5.0..5.0);
        let (dm, ds) = analytic_grads_skew(delta, sigma, lambda);
        let h = 1e-5 * sigma;
        let fd_mu = -central_difference(|d| (k.skew)(d, sigma, lambda), delta, h);
        let fd_sigma = central_difference(|s| (k.skew)(delta, s, lambda), sigma, h);
        let s2 = sigma * sigma;
        let gamma = crate::normal::inverse_mills(lambda * delta / sigma);
        let mu_scale = (delta.abs() / s2 + lambda.abs() * gamma / sigma).max(1.0 / sigma);
        let sigma_scale = 1.0 / sigma + delta * delta / (s2 * sigma) + (lambda * delta).abs() * gamma / s2;
        worst = worst
            .max(rel_err(dm, fd_mu, mu_scale))
            .max(rel_err(ds, fd_sigma, sigma_scale));
    }
    CheckResult::new(
        "skew_gradients",
        "skew-adjusted (d_mu, d_sigma) match central differences, 1000 draws, |lambda| <= 5",
        1e-6,
        worst,
    )
}

fn skew_grid() -> impl Iterator<Item = (f64, f64)> {
    (0..20).flat_map(|a| {
        let delta = 0.05 * (400.0f64).powf(a as f64 / 19.0);
        (0..20).map(move |b| (delta, -5.0 + 10.0 * b as f64 / 19.0))
    })
}

/// The damped fixed point is stationary: both the map residual and the
/// σ-gradient vanish (scaled by σ*).
pub fn skew_fixed_point_stationarity() -> CheckResult {
    const NAME: &str = "skew_fixed_point_stationarity";
    const CLAIM: &str = "sigma* = map(sigma*) and sigma* x d_sigma(sigma*) = 0, 20x20 (delta, lambda) grid";
    let mut worst: f64 = 0.0;
    for (delta, lambda) in skew_grid() {
        let Ok(s) = optimal_sigma_skew(delta, lambda, 1e-14 * delta) else {
            return CheckResult::failed(NAME, CLAIM, 1e-8);
        };
        let residual = (skew_sigma_map(delta, lambda, s) - s).abs() / delta;
        let grad = (s * analytic_grads_skew(delta, s, lambda).1).abs();
        worst = worst.max(residual).max(grad);
    }
    CheckResult::new(NAME, CLAIM, 1e-8, worst)
}

/// The fixed point is the minimizer found by golden-section search.
pub fn skew_fixed_point_argmin(k: &Kernels) -> CheckResult {
    const NAME: &str = "skew_fixed_point_argmin";
    const CLAIM: &str = "sigma* agrees with golden-section argmin of the skew loss (relative to delta)";
    let mut worst: f64 = 0.0;
    for (delta, lambda) in skew_grid().chain([(1.0, 1.0), (1.0, -1.0)]) {
        let Ok(s) = optimal_sigma_skew(delta, lambda, 1e-14 * delta) else {
            return CheckResult::failed(NAME, CLAIM, 1e-6);
        };
        let gs = golden_section_min(|x| (k.skew)(delta, x, lambda), 1e-3 * delta, 20.0 * delta, 1e-13 * delta);
        worst = worst.max((s - gs).abs() / delta);
    }
    CheckResult::new(NAME, CLAIM, 1e-6, worst)
}

/// λ > 0 shrinks σ* below δ, λ < 0 stretches it above, λ = 0 returns δ.
pub fn skew_scale_asymmetry() -> CheckResult {
    let mut violations = 0;
    for (delta, lambda) in skew_grid() {
        match optimal_sigma_skew(delta, lambda, 1e-14 * delta) {
            Ok(s) if (lambda > 0.0 && s < delta) || (lambda < 0.0 && s > delta) => {}
            _ => violations += 1,
        }
        if optimal_sigma_skew(delta, 0.0, 1e-12).ok() != Some(delta) {
            violations += 1;
        }
    }
    CheckResult::new(
        "skew_scale_asymmetry",
        "lambda>0 => sigma*<delta, lambda<0 => sigma*>delta, lambda=0 => sigma*=delta (violations)",
        0.0,
        violations as f64,
    )
}

/// With λ = 0 the skew loss and its gradients are the Gaussian ones.
pub fn lambda_zero_reduction(k: &Kernels) -> CheckResult {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let delta = r.random_range(-10.0..10.0);
        let sigma = log_uniform(&mut r, 1e-2, 10.0);
        worst = worst.max(((k.skew)(delta, sigma, 0.0) - (k.gaussian)(delta, sigma)).abs());
        let (gm, gs) = analytic_grads_gaussian(delta, sigma);
        let (sm, ss) = analytic_grads_skew(delta, sigma, 0.0);
        let scale = 1.0 / sigma + delta * delta / (sigma * sigma * sigma);
        worst = worst.max((gm - sm).abs() / scale).max((gs - ss).abs() / scale);
    }
    CheckResult::new(
        "lambda_zero_reduction",
        "lambda=0: skew loss == Gaussian loss (absolute), gradients agree (relative), 1000 draws",
        1e-12,
        worst,
    )
}

/// `|∂ℓ/∂μ| = |δ|/σ²` strictly decreases in σ.
pub fn mu_gradient_monotone() -> CheckResult {
    let mut r = rng(7);
    let mut violations = 0;
    for _ in 0..200 {
        let delta = r.random_range(0.01..10.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut prev = f64::INFINITY;
        for j in 0..200 {
            let sigma = 1e-2 * 1.05f64.powi(j);
            let g = analytic_grads_gaussian(delta, sigma).0.abs();
            if !(g < prev) {
                violations += 1;
            }
            prev = g;
        }
    }
    CheckResult::new(
        "mu_gradient_monotone",
        "|d_mu| strictly decreasing in sigma for fixed delta != 0 (violations)",
        0.0,
        violations as f64,
    )
}

/// The σ-gradient is negative exactly when σ < |δ|.
pub fn sigma_gradient_sign() -> CheckResult {
    let mut r = rng(8);
    let mut violations = 0;
    for _ in 0..5000 {
        let delta: f64 = r.random_range(-10.0..10.0);
        let sigma = log_uniform(&mut r, 1e-3, 100.0);
        if sigma == delta.abs() {
            continue;
        }
        if (analytic_grads_gaussian(delta, sigma).1 < 0.0) != (sigma < delta.abs()) {
            violations += 1;
        }
    }
    CheckResult::new(
        "sigma_gradient_sign",
        "d_sigma < 0 iff sigma < |delta| (Gaussian, violations over 5000 draws)",
        0.0,
        violations as f64,
    )
}

/// Network gradients of the trajectory loss (frozen noise) against central
/// differences for every family; width-8 nets, `T ≤ 5`.
pub fn trajectory_gradients() -> CheckResult {
    const NAME: &str = "trajectory_gradients";
    const CLAIM: &str = "end-to-end LOO loss gradients match finite differences, width 8, T <= 5";
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    let h = 1e-6;
    for family in [Family::Gaussian, Family::SkewNormal, Family::FixedSigmaMse] {
        for _ in 0..8 {
            let mut model = random_model(family, 8, &mut r);
            let len = r.random_range(1..=5);
            let traj = random_trajectory(len, &mut r);
            let noise = NoiseTable::draw(len, false, &mut r);
            let Ok(analytic) = trajectory_loss_with_noise(&model, &traj, &noise).and_then(|tl| tl.param_grads(&model))
            else {
                return CheckResult::failed(NAME, CLAIM, 1e-5);
            };
            for (p, &an) in analytic.iter().enumerate() {
                let at = |m: &mut RewardModel, v: f64| {
                    m.net_mut().params_mut()[p] = v;
                    trajectory_loss_with_noise(m, &traj, &noise).map(|tl| tl.loss)
                };
                let x = model.net().params()[p];
                let (Ok(up), Ok(down)) = (at(&mut model, x + h), at(&mut model, x - h)) else {
                    return CheckResult::failed(NAME, CLAIM, 1e-5);
                };
                model.net_mut().params_mut()[p] = x;
                let fd = (up - down) / (2.0 * h);
                // gradients below 1e-3 are compared absolutely at 1e-8
                worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-3));
            }
        }
    }
    CheckResult::new(NAME, CLAIM, 1e-5, worst)
}

/// Seeded trajectory losses and train steps repeat bitwise.
pub fn loss_determinism() -> CheckResult {
    const NAME: &str = "loss_determinism";
    const CLAIM: &str = "seeded trajectory_loss and train_step are bitwise repeatable (mismatches)";
    let mut r = rng(10);
    let base = random_model(Family::SkewNormal, 8, &mut r);
    let traj = random_trajectory(5, &mut r);
    let run = || -> Option<(u64, Vec<u64>)> {
        let mut m = base.clone();
        let mut seeded = ChaCha8Rng::seed_from_u64(99);
        let loss = trajectory_loss(&m, &traj, &mut seeded).ok()?.loss;
        m.train_step(&[&traj, &traj], 1e-3, &mut seeded).ok()?;
        Some((loss.to_bits(), m.net().params().iter().map(|p| p.to_bits()).collect()))
    };
    match (run(), run()) {
        (Some(a), Some(b)) => CheckResult::new(NAME, CLAIM, 0.0, if a == b { 0.0 } else { 1.0 }),
        _ => CheckResult::failed(NAME, CLAIM, 0.0),
    }
}

/// Over 1000 random-action episodes spread across all environments the
/// wrapper emits zero until the end, then the inner-reward sum.
pub fn episodic_conservation() -> CheckResult {
    const NAME: &str = "episodic_conservation";
    const CLAIM: &str = "terminal emitted reward == sum of inner rewards, non-terminal emitted == 0, 1000 episodes";
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for e in 0..1000 {
        let name = ENV_NAMES[e % ENV_NAMES.len()];
        let Ok(inner) = make_env(name, 200) else {
            return CheckResult::failed(NAME, CLAIM, 1e-12);
        };
        let mut env = EpisodicWrapper::new(inner);
        let (low, high) = (env.spec().action_low.clone(), env.spec().action_high.clone());
        env.reset(r.random());
        let mut inner_sum = 0.0;
        loop {
            let action: Vec<f64> = low.iter().zip(&high).map(|(&l, &h)| r.random_range(l..h)).collect();
            let Ok(step) = env.step(&action) else {
                return CheckResult::failed(NAME, CLAIM, 1e-12);
            };
            inner_sum += step.inner_reward;
            if step.done() {
                worst = worst.max((step.reward - inner_sum).abs());
                break;
            }
            if step.reward != 0.0 {
                return CheckResult::failed(NAME, CLAIM, 1e-12);
            }
        }
    }
    CheckResult::new(NAME, CLAIM, 1e-12, worst)
}

/// AR(1) with coefficient φ and unit stationary variance.
pub fn ar1_series(phi: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let scale = (1.0 - phi * phi).sqrt();
    let mut x: f64 = r.sample(StandardNormal);
    (0..n)
        .map(|_| {
            let cur = x;
            x = phi * x + scale * r.sample::<f64, _>(StandardNormal);
            cur
        })
        .collect()
}

/// Known-answer autocorrelation cases; observed is the largest distance
/// outside the accepted band.
pub fn autocorr_oracles() -> CheckResult {
    const NAME: &str = "autocorr_oracles";
    const CLAIM: &str = "AR(1) 0.9 in [0.88, 0.92], alternating == -1 +- 1e-9, white noise |rho| < 3/sqrt(n)";
    let n = 100_000;
    let (Ok(ar), Ok(alt), Ok(white)) = (
        lag1_autocorr(&ar1_series(0.9, n, 21)),
        lag1_autocorr(&(0..1000).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<f64>>()),
        lag1_autocorr(&ar1_series(0.0, n, 22)),
    ) else {
        return CheckResult::failed(NAME, CLAIM, 0.0);
    };
    let outside = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
    let bound = 3.0 / (n as f64).sqrt();
    let observed = outside(ar, 0.88, 0.92)
        .max(outside(alt, -1.0 - 1e-9, -1.0 + 1e-9))
        .max(outside(white, -bound, bound));
    CheckResult::new(NAME, CLAIM, 0.0, observed)
}

/// Range, affine invariance, interval containment and interval shrinkage.
pub fn autocorr_invariants() -> CheckResult {
    let mut r = rng(12);
    let mut violations = 0;
    for trial in 0..50 {
        let phi = r.random_range(-0.95..0.95);
        let xs = ar1_series(phi, 50 + trial * 10, r.random());
        let Ok(base) = lag1_autocorr(&xs) else {
            violations += 1;
            continue;
        };
        if !(-1.0..=1.0).contains(&base) {
            violations += 1;
        }
        let a = r.random_range(0.1..10.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let b = r.random_range(-10.0..10.0);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        match lag1_autocorr(&ys) {
            Ok(v) if (v - base).abs() < 1e-9 => {}
            _ => violations += 1,
        }
        let mut width = f64::INFINITY;
        for n in [4, 20, 200, 2000] {
            match autocorr_ci(base, n) {
                Ok((lo, hi)) if lo <= base && base <= hi && hi - lo < width => width = hi - lo,
                _ => violations += 1,
            }
        }
    }
    CheckResult::new(
        "autocorr_invariants",
        "rho in [-1,1], invariant under a*x+b (a != 0), CI contains rho and narrows with n (violations)",
        0.0,
        violations as f64,
    )
}

/// Pendulum rewards are strongly autocorrelated under a random policy, the
/// key-and-door chain is not. Observed is the margin by which either
/// condition is missed.
pub fn environment_autocorr_split() -> CheckResult {
    const NAME: &str = "environment_autocorr_split";
    const CLAIM: &str = "random policy: pendulum rho > 0.5, delayed_chain |rho| < 0.2";
    let (Ok(pend), Ok(chain)) = (
        autocorr_report("pendulum", 200, 50, 0),
        autocorr_report("delayed_chain", 200, 200, 0),
    ) else {
        return CheckResult::failed(NAME, CLAIM, 0.0);
    };
    let miss = (0.5 - pend.rho1).max(chain.rho1.abs() - 0.2).max(0.0);
    // the equality boundary itself is a failure
    let miss = if pend.rho1 > 0.5 && chain.rho1.abs() < 0.2 { 0.0 } else { miss.max(f64::MIN_POSITIVE) };
    CheckResult::new(NAME, CLAIM, 0.0, miss)
}

/// Pooled estimation never links the last reward of one episode with the
/// first of the next.
pub fn pooled_boundaries() -> CheckResult {
    let eps = [vec![1.0, 2.0], vec![-2.0, -1.0]];
    let observed = match lag1_autocorr_pooled(&eps) {
        Ok((rho, 2)) => (rho - 0.8).abs(),
        _ => f64::INFINITY,
    };
    CheckResult::new(
        "pooled_boundaries",
        "pooled lag-1 estimate excludes cross-episode pairs",
        1e-15,
        observed,
    )
}

/// Runs every check with the given loss kernels.
pub fn run_checks(k: &Kernels) -> Vec<CheckResult> {
    vec![
        mse_equivalence(),
        gaussian_sigma_argmin(k),
        reparameterized_alpha(k),
        gaussian_gradients(k),
        skew_gradients(k),
        skew_fixed_point_stationarity(),
        skew_fixed_point_argmin(k),
        skew_scale_asymmetry(),
        lambda_zero_reduction(k),
        mu_gradient_monotone(),
        sigma_gradient_sign(),
        trajectory_gradients(),
        loss_determinism(),
        episodic_conservation(),
        autocorr_oracles(),
        autocorr_invariants(),
        environment_autocorr_split(),
        pooled_boundaries(),
    ]
}

pub fn verify_all() -> Vec<CheckResult> {
    run_checks(&Kernels::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes_on_the_library() {
        let results = verify_all();
        assert!(results.len() >= 8);
        for r in &results {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn dropping_log_sigma_is_caught() {
        let broken = Kernels {
            gaussian: |d, s| d * d / (2.0 * s * s),
            ..Kernels::default()
        };
        assert!(!gaussian_sigma_argmin(&broken).passed);
        assert!(!reparameterized_alpha(&broken).passed);
    }
}
