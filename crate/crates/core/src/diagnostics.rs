//! Lag-1 reward autocorrelation with Fisher-z confidence intervals.

use rand::Rng;
use serde::Serialize;

use crate::env::{make_env, Environment};
use crate::error::{Error, Result};
use crate::seeding::{stream_rng, Stream};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Lag-1 sample autocorrelation of one sequence.
///
/// Lag products are averaged over the `n-1` pairs and squared deviations
/// over the `n` samples, so a perfectly alternating sequence scores exactly
/// -1 at any length. Asymptotically this equals
/// `Σ(x_t - x̄)(x_{t+1} - x̄) / Σ(x_t - x̄)²`.
pub fn lag1_autocorr(rewards: &[f64]) -> Result<f64> {
    lag1_autocorr_pooled(&[rewards]).map(|(rho, _)| rho)
}

/// Pooled estimate over several episodes: one grand mean, cross terms only
/// between neighbours inside the same episode. Returns `(ρ₁, pairs)`.
pub fn lag1_autocorr_pooled<S: AsRef<[f64]>>(episodes: &[S]) -> Result<(f64, usize)> {
    let n: usize = episodes.iter().map(|e| e.as_ref().len()).sum();
    if n < 3 {
        return Err(Error::Domain(format!(
            "lag-1 autocorrelation needs at least 3 samples, got {n}"
        )));
    }
    if let Some(bad) = episodes.iter().flat_map(|e| e.as_ref()).find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite reward {bad}")));
    }
    let mean = episodes.iter().flat_map(|e| e.as_ref()).sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = 0;
    for ep in episodes {
        let ep = ep.as_ref();
        for (k, x) in ep.iter().enumerate() {
            let dx = x - mean;
            den += dx * dx;
            if let Some(next) = ep.get(k + 1) {
                num += dx * (next - mean);
                pairs += 1;
            }
        }
    }
    if den == 0.0 || pairs == 0 {
        return Err(Error::Degenerate(
            "rewards have zero variance or no within-episode pairs".into(),
        ));
    }
    let rho = (num / pairs as f64) / (den / n as f64);
    Ok((rho.clamp(-1.0, 1.0), pairs))
}

/// `tanh(atanh(ρ) ± 1.96/√(n-3))`.
pub fn autocorr_ci(rho1: f64, n: usize) -> Result<(f64, f64)> {
    if n <= 3 {
        return Err(Error::Domain(format!("confidence interval needs n > 3, got {n}")));
    }
    if !(rho1.abs() < 1.0) {
        return Err(Error::Domain(format!("confidence interval needs |rho1| < 1, got {rho1}")));
    }
    let z = rho1.atanh();
    let half = Z_95 / ((n - 3) as f64).sqrt();
    Ok(((z - half).tanh(), (z + half).tanh()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AutocorrReport {
    pub environment: String,
    pub rho1: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Inner dense rewards of `episodes` uniform-random-policy episodes.
pub fn random_policy_rewards(
    env_name: &str,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut env = make_env(env_name, horizon)?;
    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut act_rng = stream_rng(seed, Stream::Sac);
    let (low, high) = (env.spec().action_low.clone(), env.spec().action_high.clone());
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        env.reset(env_rng.random());
        let mut rewards = Vec::new();
        loop {
            let action: Vec<f64> = low
                .iter()
                .zip(&high)
                .map(|(&l, &h)| act_rng.random_range(l..h))
                .collect();
            let r = env.step(&action)?;
            rewards.push(r.reward);
            if r.terminated || r.truncated {
                break;
            }
        }
        out.push(rewards);
    }
    Ok(out)
}

/// Pooled ρ₁ and its interval for one environment; `n` is the number of
/// lag pairs.
pub fn autocorr_report(env_name: &str, horizon: usize, episodes: usize, seed: u64) -> Result<AutocorrReport> {
    let rewards = random_policy_rewards(env_name, horizon, episodes, seed)?;
    let (rho1, n) = lag1_autocorr_pooled(&rewards)?;
    let (ci_low, ci_high) = autocorr_ci(rho1, n)?;
    Ok(AutocorrReport {
        environment: env_name.to_string(),
        rho1,
        ci_low,
        ci_high,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (1.0 - phi * phi).sqrt();
        let mut x = rng.sample::<f64, _>(StandardNormal);
        (0..n)
            .map(|_| {
                let cur = x;
                x = phi * x + scale * rng.sample::<f64, _>(StandardNormal);
                cur
            })
            .collect()
    }

    #[test]
    fn alternating_is_minus_one() {
        for n in [4, 10, 1000] {
            let xs: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
            assert!((lag1_autocorr(&xs).unwrap() + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn white_noise_and_ar1_oracles() {
        let n = 100_000;
        assert!(lag1_autocorr(&ar1(0.0, n, 1)).unwrap().abs() < 3.0 / (n as f64).sqrt());
        let rho = lag1_autocorr(&ar1(0.9, n, 2)).unwrap();
        assert!((0.88..=0.92).contains(&rho), "{rho}");
    }

    #[test]
    fn degenerate_and_short_inputs() {
        assert!(matches!(lag1_autocorr(&[2.0; 5]), Err(Error::Degenerate(_))));
        assert!(matches!(lag1_autocorr(&[1.0, 2.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn pooled_excludes_boundary_pairs() {
        // concatenating would pair 2.0 with -2.0; pooling must not
        let (rho_pooled, pairs) = lag1_autocorr_pooled(&[vec![1.0, 2.0], vec![-2.0, -1.0]]).unwrap();
        assert_eq!(pairs, 2);
        // mean 0; pair mean (1*2 + (-2)(-1))/2 = 2; variance 10/4
        assert!((rho_pooled - 0.8).abs() < 1e-15);
    }

    #[test]
    fn affine_invariance() {
        let xs = ar1(0.5, 500, 3);
        let base = lag1_autocorr(&xs).unwrap();
        for (a, b) in [(2.0, 3.0), (0.1, -7.0), (-3.0, 1.0), (-0.5, 0.0)] {
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            assert!((lag1_autocorr(&ys).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn ci_examples() {
        let (lo, hi) = autocorr_ci(0.0, 10_003).unwrap();
        assert!((lo + 0.0196).abs() < 1e-4 && (hi - 0.0196).abs() < 1e-4);
        let (lo, hi) = autocorr_ci(0.9, 403).unwrap();
        assert!((lo - 0.8797).abs() < 1e-3 && (hi - 0.9171).abs() < 1e-3, "{lo} {hi}");
        assert!(autocorr_ci(0.5, 3).is_err());
        assert!(autocorr_ci(1.0, 100).is_err());
    }

    #[test]
    fn ci_contains_rho_and_shrinks_with_n() {
        for rho in [-0.95, -0.3, 0.0, 0.42, 0.99] {
            let mut width = f64::INFINITY;
            for n in [4, 10, 100, 1000, 100_000] {
                let (lo, hi) = autocorr_ci(rho, n).unwrap();
                assert!(lo <= rho && rho <= hi);
                assert!(hi - lo < width);
                width = hi - lo;
            }
        }
    }

    fn pearson(pairs: &[(f64, f64)]) -> f64 {
        let n = pairs.len() as f64;
        let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (x, y) in pairs {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        sxy / (sxx * syy).sqrt()
    }

    /// Parametric bootstrap: correlation of 403 independent pairs with
    /// ρ = 0.9. The Fisher interval is built for this regime.
    #[test]
    fn ci_agrees_with_parametric_bootstrap() {
        let (n, reps, rho) = (403, 4000, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut estimates: Vec<f64> = (0..reps)
            .map(|_| {
                let pairs: Vec<(f64, f64)> = (0..n)
                    .map(|_| {
                        let x: f64 = rng.sample(StandardNormal);
                        let e: f64 = rng.sample(StandardNormal);
                        (x, rho * x + (1.0f64 - rho * rho).sqrt() * e)
                    })
                    .collect();
                pearson(&pairs)
            })
            .collect();
        estimates.sort_by(f64::total_cmp);
        let lo = estimates[(0.025 * reps as f64) as usize];
        let hi = estimates[(0.975 * reps as f64) as usize];
        let (flo, fhi) = autocorr_ci(rho, n).unwrap();
        assert!((lo - flo).abs() < 3e-3 && (hi - fhi).abs() < 3e-3, "({lo}, {hi}) vs ({flo}, {fhi})");
    }

    #[test]
    fn environment_reports_are_ordered_as_expected() {
        let pend = autocorr_report("pendulum", 200, 20, 0).unwrap();
        assert!(pend.rho1 > 0.5, "{pend:?}");
        let chain = autocorr_report("delayed_chain", 200, 200, 0).unwrap();
        assert!(chain.rho1.abs() < 0.2, "{chain:?}");
        assert!(pend.ci_low <= pend.rho1 && pend.rho1 <= pend.ci_high);
    }
}
