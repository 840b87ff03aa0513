//! Leave-one-out likelihood losses and their gradients with respect to the
//! per-step distribution heads.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Family, RewardModel, Trajectory};
use crate::error::{Error, Result};
use crate::nn::{ForwardCache, Matrix};
use crate::normal;

/// Per-step distribution parameters produced by the reward head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardDistributionParams {
    pub mu: f64,
    pub sigma: f64,
    /// Shape parameter; `Some` only for the skew-normal family.
    pub lambda: Option<f64>,
}

/// Reparameterized draw `mu + epsilon * sigma`.
///
/// The skew-normal family samples with the same location-scale form; its
/// shape only enters the likelihood of the left-out step.
pub fn sample_step_reward(params: &RewardDistributionParams, epsilon: f64) -> f64 {
    params.mu + epsilon * params.sigma
}

/// Episodic return minus the sampled rewards of every step except `i`.
pub fn loo_return(episodic_return: f64, sampled_rewards: &[f64], i: usize) -> Result<f64> {
    if i >= sampled_rewards.len() {
        return Err(Error::Index {
            index: i,
            len: sampled_rewards.len(),
        });
    }
    let others: f64 = sampled_rewards
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != i)
        .map(|(_, r)| r)
        .sum();
    Ok(episodic_return - others)
}

/// Gaussian per-step NLL without the `½ ln 2π` constant.
pub fn gaussian_nll(r_tilde: f64, params: &RewardDistributionParams) -> f64 {
    let delta = r_tilde - params.mu;
    params.sigma.ln() + delta * delta / (2.0 * params.sigma * params.sigma)
}

/// Skew-normal per-step NLL, `ln σ + z²/2 - ln(2Φ(λz))` with `z = (r̃ - μ)/σ`.
///
/// The constant matches [`gaussian_nll`], so `λ = 0` reproduces it exactly.
pub fn skew_normal_nll(r_tilde: f64, params: &RewardDistributionParams) -> f64 {
    let lambda = params.lambda.unwrap_or(0.0);
    let z = (r_tilde - params.mu) / params.sigma;
    // ln 2 + ln Φ(0) cancels exactly, so λ = 0 is bitwise the Gaussian loss
    gaussian_nll(r_tilde, params) - (std::f64::consts::LN_2 + normal::ln_cdf(lambda * z))
}

/// Loss and partial derivatives of one left-out step, as a function of
/// `δ = r̃ - μ`, `σ` and `λ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepTerms {
    pub loss: f64,
    pub d_delta: f64,
    pub d_sigma: f64,
    pub d_lambda: f64,
}

pub(crate) fn step_terms(family: Family, delta: f64, sigma: f64, lambda: f64) -> StepTerms {
    match family {
        Family::FixedSigmaMse => StepTerms {
            loss: 0.5 * delta * delta,
            d_delta: delta,
            d_sigma: 0.0,
            d_lambda: 0.0,
        },
        Family::Gaussian => {
            let s2 = sigma * sigma;
            StepTerms {
                loss: sigma.ln() + delta * delta / (2.0 * s2),
                d_delta: delta / s2,
                d_sigma: 1.0 / sigma - delta * delta / (s2 * sigma),
                d_lambda: 0.0,
            }
        }
        Family::SkewNormal => {
            let z = delta / sigma;
            let params = RewardDistributionParams {
                mu: 0.0,
                sigma,
                lambda: Some(lambda),
            };
            let gamma = normal::inverse_mills(lambda * z);
            let d_z = z - lambda * gamma;
            StepTerms {
                loss: skew_normal_nll(delta, &params),
                d_delta: d_z / sigma,
                d_sigma: 1.0 / sigma - d_z * z / sigma,
                d_lambda: -gamma * z,
            }
        }
    }
}

/// Squared return-decomposition residual `(R_ep - Σ_t μ_t)²`.
pub fn mse_rd_loss(model: &RewardModel, traj: &Trajectory) -> Result<f64> {
    let mu = model.redistribute(traj)?;
    let residual = traj.episodic_return() - mu.iter().sum::<f64>();
    Ok(residual * residual)
}

/// Standard-normal noise `ε_{i,t}` for one trajectory, indexed by left-out
/// step `i` and sampled step `t`. Diagonal entries are unused and zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    len: usize,
    data: Vec<f64>,
}

impl NoiseTable {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            data: vec![0.0; len * len],
        }
    }

    /// Draws `ε_{i,t}` row by row (`i` outer, `t` inner). With `shared`, one
    /// vector `ε_t` is drawn and reused for every `i`.
    pub fn draw<R: Rng + ?Sized>(len: usize, shared: bool, rng: &mut R) -> Self {
        let mut table = Self::zeros(len);
        if shared {
            let eps: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
            for i in 0..len {
                for t in 0..len {
                    if t != i {
                        table.data[i * len + t] = eps[t];
                    }
                }
            }
        } else {
            for i in 0..len {
                for t in 0..len {
                    if t != i {
                        table.data[i * len + t] = rng.sample(StandardNormal);
                    }
                }
            }
        }
        table
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let len = rows.len();
        let mut table = Self::zeros(len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != len {
                return Err(Error::Shape(format!(
                    "noise row {i} has length {}, expected {len}",
                    row.len()
                )));
            }
            for (t, &e) in row.iter().enumerate() {
                if t != i {
                    table.data[i * len + t] = e;
                }
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    pub fn get(&self, i: usize, t: usize) -> f64 {
        self.data[i * self.len + t]
    }
}

/// One leave-one-out evaluation of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct LooSample {
    pub index: usize,
    /// `ε_{i,t}` as drawn; entry `index` is unused.
    pub noise: Vec<f64>,
    pub loo_return: f64,
    pub step_loss: f64,
}

/// Trajectory loss together with what is needed to backpropagate it.
#[derive(Debug, Clone)]
pub struct TrajectoryLoss {
    pub loss: f64,
    pub samples: Vec<LooSample>,
    /// `∂loss/∂(raw head output)`, one row per step.
    pub head_grads: Matrix,
    pub mean_sigma: f64,
    /// `|R_ep - Σ_t μ_t|`.
    pub abs_residual: f64,
    pub(crate) cache: ForwardCache,
}

impl TrajectoryLoss {
    /// Network parameter gradient of `loss`.
    pub fn param_grads(&self, model: &RewardModel) -> Result<Vec<f64>> {
        let mut grads = vec![0.0; model.net().num_params()];
        model
            .net()
            .backward_accumulate(&self.cache, &self.head_grads, &mut grads)?;
        Ok(grads)
    }
}

/// Draws fresh noise for every `(i, t)` and evaluates the leave-one-out
/// trajectory loss. The fixed-σ family draws nothing.
pub fn trajectory_loss<R: Rng + ?Sized>(
    model: &RewardModel,
    traj: &Trajectory,
    rng: &mut R,
) -> Result<TrajectoryLoss> {
    let noise = match model.family() {
        Family::FixedSigmaMse => NoiseTable::zeros(traj.len()),
        _ => NoiseTable::draw(traj.len(), model.shared_noise(), rng),
    };
    trajectory_loss_with_noise(model, traj, &noise)
}

/// Leave-one-out trajectory loss for a given noise table:
/// `(1/T) Σ_i ℓ(r̃_i; μ_i, σ_i[, λ_i])` with
/// `r̃_i = R_ep - Σ_{t≠i} (μ_t + σ_t ε_{i,t})`.
pub fn trajectory_loss_with_noise(
    model: &RewardModel,
    traj: &Trajectory,
    noise: &NoiseTable,
) -> Result<TrajectoryLoss> {
    let len = traj.len();
    if noise.len() != len {
        return Err(Error::Shape(format!(
            "noise table covers {} steps, trajectory has {len}",
            noise.len()
        )));
    }
    let family = model.family();
    let (heads, cache) = model.head_outputs(traj)?;
    let params: Vec<RewardDistributionParams> =
        (0..len).map(|t| model.params_from_head(heads.row(t))).collect();

    let sum_mu: f64 = params.iter().map(|p| p.mu).sum();
    let base = traj.episodic_return() - sum_mu;
    let inv_len = 1.0 / len as f64;

    let mut samples = Vec::with_capacity(len);
    let mut terms = Vec::with_capacity(len);
    let mut total = 0.0;
    for i in 0..len {
        let row = noise.row(i);
        let noise_sum: f64 = (0..len)
            .filter(|&t| t != i)
            .map(|t| params[t].sigma * row[t])
            .sum();
        // δ_i = r̃_i - μ_i = R_ep - Σ_t μ_t - Σ_{t≠i} σ_t ε_{i,t}
        let delta = base - noise_sum;
        let p = &params[i];
        let st = step_terms(family, delta, p.sigma, p.lambda.unwrap_or(0.0));
        total += st.loss;
        samples.push(LooSample {
            index: i,
            noise: row.to_vec(),
            loo_return: delta + p.mu,
            step_loss: st.loss,
        });
        terms.push(st);
    }
    let loss = total * inv_len;

    let width = family.head_width();
    let mut head_grads = Matrix::zeros(len, width);
    let d_mu = -inv_len * terms.iter().map(|s| s.d_delta).sum::<f64>();
    for t in 0..len {
        head_grads.set(t, 0, d_mu);
        if family == Family::FixedSigmaMse {
            continue;
        }
        let through_noise: f64 = (0..len)
            .filter(|&i| i != t)
            .map(|i| terms[i].d_delta * noise.get(i, t))
            .sum();
        let d_sigma = inv_len * (terms[t].d_sigma - through_noise);
        let raw = heads.get(t, 1);
        head_grads.set(t, 1, d_sigma * model.sigma_bounds().dsigma_draw(raw));
        if family == Family::SkewNormal {
            head_grads.set(t, 2, inv_len * terms[t].d_lambda);
        }
    }

    Ok(TrajectoryLoss {
        loss,
        samples,
        head_grads,
        mean_sigma: params.iter().map(|p| p.sigma).sum::<f64>() * inv_len,
        abs_residual: base.abs(),
        cache,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(mu: f64, sigma: f64) -> RewardDistributionParams {
        RewardDistributionParams {
            mu,
            sigma,
            lambda: None,
        }
    }

    #[test]
    fn sampling_formula() {
        assert_eq!(sample_step_reward(&p(0.7, 3.0), 0.0), 0.7);
        assert_eq!(sample_step_reward(&p(1.0, 2.0), -1.0), -1.0);
        assert_eq!(sample_step_reward(&p(0.0, 1.0), 1.5), 1.5);
    }

    #[test]
    fn loo_return_examples() {
        assert_eq!(loo_return(6.0, &[1.0, f64::NAN, 3.0], 1).unwrap(), 2.0);
        assert_eq!(loo_return(-4.5, &[123.0], 0).unwrap(), -4.5);
        assert!(matches!(loo_return(1.0, &[1.0, 2.0], 2), Err(Error::Index { index: 2, len: 2 })));
        let truth = [0.3, -1.2, 0.8, 2.5];
        let ret: f64 = truth.iter().sum();
        for i in 0..truth.len() {
            assert!((loo_return(ret, &truth, i).unwrap() - truth[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_nll_examples() {
        assert_eq!(gaussian_nll(0.4, &p(0.4, 1.0)), 0.0);
        assert!((gaussian_nll(2.0, &p(0.0, 2.0)) - 1.193_147_180_559_945_4).abs() < 1e-12);
        assert!((gaussian_nll(1.0, &p(0.0, 0.5)) - 1.306_852_819_440_054_7).abs() < 1e-12);
    }

    #[test]
    fn skew_nll_lambda_one() {
        let params = RewardDistributionParams {
            mu: 0.0,
            sigma: 1.0,
            lambda: Some(1.0),
        };
        // 0.5 - ln(2Φ(1)), Φ(1) from a 40-digit reference
        let reference = -0.020_393_401_536_495_419_9;
        assert!((skew_normal_nll(1.0, &params) - reference).abs() < 1e-13);
    }

    #[test]
    fn skew_nll_deep_tail_is_finite() {
        let params = RewardDistributionParams {
            mu: 0.0,
            sigma: 1.0,
            lambda: Some(-5.0),
        };
        // λz = -25: ℓ = 12.5 - ln 2 - ln Φ(-25)
        let reference = 12.5 - std::f64::consts::LN_2 + 316.639_408_008_020_258_935_1;
        let got = skew_normal_nll(5.0, &params);
        assert!(((got - reference) / reference).abs() < 1e-6);
    }

    #[test]
    fn shared_noise_reuses_one_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let table = NoiseTable::draw(4, true, &mut rng);
        for t in 0..4 {
            let column: Vec<f64> = (0..4).filter(|&i| i != t).map(|i| table.get(i, t)).collect();
            assert!(column.windows(2).all(|w| w[0] == w[1]));
            assert_eq!(table.get(t, t), 0.0);
        }
    }

    #[test]
    fn independent_noise_has_zero_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let table = NoiseTable::draw(5, false, &mut rng);
        for i in 0..5 {
            assert_eq!(table.get(i, i), 0.0);
        }
        assert_ne!(table.get(0, 1), table.get(2, 1));
    }
}
