//! Probabilistic per-step reward models trained with the leave-one-out
//! trajectory likelihood.
//!
//! A [`RewardModel`] maps `concat(state, action)` to the parameters of a
//! per-step reward distribution. Training draws reparameterized rewards for
//! every step but one, forms the leave-one-out return of the held-out step
//! from the observed episodic return, and minimizes that step's negative
//! log-likelihood averaged over the trajectory.

mod analysis;
mod buffer;
mod loss;

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, DenseNet, ForwardCache, Matrix};

pub use analysis::{
    analytic_grads_gaussian, analytic_grads_skew, optimal_sigma_gaussian, optimal_sigma_skew,
    skew_sigma_map, SKEW_FIXED_POINT_MAX_ITERS,
};
pub use buffer::TrajectoryBuffer;
pub use loss::{
    gaussian_nll, loo_return, mse_rd_loss, sample_step_reward, skew_normal_nll, trajectory_loss,
    trajectory_loss_with_noise, LooSample, NoiseTable, RewardDistributionParams, TrajectoryLoss,
};

/// Distribution family of the per-step reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Gaussian,
    SkewNormal,
    /// `σ ≡ 1` with no sampling noise: plain return-decomposition regression.
    FixedSigmaMse,
}

impl Family {
    /// Raw outputs of the network head: μ, then ln σ, then λ.
    pub fn head_width(self) -> usize {
        match self {
            Family::FixedSigmaMse => 1,
            Family::Gaussian => 2,
            Family::SkewNormal => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::SkewNormal => "skew_normal",
            Family::FixedSigmaMse => "fixed_sigma_mse",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "gaussian" => Some(Family::Gaussian),
            "skew_normal" => Some(Family::SkewNormal),
            "fixed_sigma_mse" => Some(Family::FixedSigmaMse),
            _ => None,
        }
    }
}

/// Clamp range for `σ = exp(raw)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for SigmaBounds {
    fn default() -> Self {
        Self { min: 1e-4, max: 1e2 }
    }
}

impl SigmaBounds {
    pub fn sigma(&self, raw_log_sigma: f64) -> f64 {
        raw_log_sigma.exp().clamp(self.min, self.max)
    }

    /// `dσ/d(raw)`: `σ` inside the clamp range, zero where the clamp is active.
    pub fn dsigma_draw(&self, raw_log_sigma: f64) -> f64 {
        let s = raw_log_sigma.exp();
        if s < self.min || s > self.max {
            0.0
        } else {
            s
        }
    }
}

/// One state-action pair of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
}

/// Ordered state-action pairs and the episodic return they earned.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    steps: Vec<Step>,
    episodic_return: f64,
}

impl Trajectory {
    pub fn new(steps: Vec<(Vec<f64>, Vec<f64>)>, episodic_return: f64) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Shape("a trajectory needs at least one step".into()));
        }
        if !episodic_return.is_finite() {
            return Err(Error::Domain(format!(
                "episodic return must be finite, got {episodic_return}"
            )));
        }
        let (sd, ad) = (steps[0].0.len(), steps[0].1.len());
        for (t, (s, a)) in steps.iter().enumerate() {
            if s.len() != sd || a.len() != ad {
                return Err(Error::Shape(format!(
                    "step {t} has state/action sizes {}/{}, expected {sd}/{ad}",
                    s.len(),
                    a.len()
                )));
            }
            if s.iter().chain(a).any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("step {t} has a non-finite entry")));
            }
        }
        Ok(Self {
            steps: steps
                .into_iter()
                .map(|(state, action)| Step { state, action })
                .collect(),
            episodic_return,
        })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn episodic_return(&self) -> f64 {
        self.episodic_return
    }

    /// `concat(state, action)` per step, one row each.
    pub fn inputs(&self) -> Matrix {
        let rows: Vec<Vec<f64>> = self
            .steps
            .iter()
            .map(|s| s.state.iter().chain(&s.action).copied().collect())
            .collect();
        Matrix::from_rows(&rows).expect("steps share one shape")
    }
}

/// Summary of one optimizer update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    /// Minibatch loss before the update.
    pub loss: f64,
    pub mean_sigma: f64,
    pub mean_abs_residual: f64,
}

#[derive(Debug, Clone)]
pub struct RewardModel {
    family: Family,
    net: DenseNet,
    adam: AdamState,
    bounds: SigmaBounds,
    shared_noise: bool,
}

impl RewardModel {
    /// Randomly initialized model with the given hidden layer widths.
    pub fn new<R: Rng + ?Sized>(
        family: Family,
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = vec![state_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(family.head_width());
        Self::from_net(family, DenseNet::new(&sizes, rng)?, SigmaBounds::default())
    }

    pub fn from_net(family: Family, net: DenseNet, bounds: SigmaBounds) -> Result<Self> {
        if net.output_size() != family.head_width() {
            return Err(Error::Shape(format!(
                "{} head needs {} outputs, network has {}",
                family.name(),
                family.head_width(),
                net.output_size()
            )));
        }
        if !(bounds.min > 0.0 && bounds.min < bounds.max && bounds.max.is_finite()) {
            return Err(Error::Domain(format!(
                "invalid sigma bounds [{}, {}]",
                bounds.min, bounds.max
            )));
        }
        let adam = AdamState::new(net.num_params());
        Ok(Self {
            family,
            net,
            adam,
            bounds,
            shared_noise: false,
        })
    }

    pub fn with_shared_noise(mut self, shared: bool) -> Self {
        self.shared_noise = shared;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn net(&self) -> &DenseNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut DenseNet {
        &mut self.net
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn sigma_bounds(&self) -> SigmaBounds {
        self.bounds
    }

    pub fn shared_noise(&self) -> bool {
        self.shared_noise
    }

    pub(crate) fn params_from_head(&self, raw: &[f64]) -> RewardDistributionParams {
        match self.family {
            Family::FixedSigmaMse => RewardDistributionParams {
                mu: raw[0],
                sigma: 1.0,
                lambda: None,
            },
            Family::Gaussian => RewardDistributionParams {
                mu: raw[0],
                sigma: self.bounds.sigma(raw[1]),
                lambda: None,
            },
            Family::SkewNormal => RewardDistributionParams {
                mu: raw[0],
                sigma: self.bounds.sigma(raw[1]),
                lambda: Some(raw[2]),
            },
        }
    }

    pub(crate) fn head_outputs(&self, traj: &Trajectory) -> Result<(Matrix, ForwardCache)> {
        self.net.forward_batch(&traj.inputs())
    }

    pub fn predict_params(&self, state: &[f64], action: &[f64]) -> Result<RewardDistributionParams> {
        let input: Vec<f64> = state.iter().chain(action).copied().collect();
        let (raw, _) = self.net.forward(&input)?;
        Ok(self.params_from_head(&raw))
    }

    /// Noise-free dense reward `μ(s_t, a_t)` for every step.
    pub fn redistribute(&self, traj: &Trajectory) -> Result<Vec<f64>> {
        let (heads, _) = self.head_outputs(traj)?;
        Ok((0..heads.rows()).map(|t| heads.get(t, 0)).collect())
    }

    /// `μ` for a batch of `concat(state, action)` rows.
    pub fn mean_rewards(&self, inputs: &Matrix) -> Result<Vec<f64>> {
        let (heads, _) = self.net.forward_batch(inputs)?;
        Ok((0..heads.rows()).map(|t| heads.get(t, 0)).collect())
    }

    /// One Adam update on the mean trajectory loss of `minibatch`.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        minibatch: &[&Trajectory],
        learning_rate: f64,
        rng: &mut R,
    ) -> Result<TrainStats> {
        if minibatch.is_empty() {
            return Err(Error::Shape("empty minibatch".into()));
        }
        let scale = 1.0 / minibatch.len() as f64;
        let mut grads = vec![0.0; self.net.num_params()];
        let mut stats = TrainStats {
            loss: 0.0,
            mean_sigma: 0.0,
            mean_abs_residual: 0.0,
        };
        for (j, traj) in minibatch.iter().enumerate() {
            let mut tl = trajectory_loss(self, traj, rng)?;
            if let Some(bad) = tl.samples.iter().find(|s| !s.step_loss.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    trajectory: j,
                    step: bad.index,
                    value: bad.step_loss,
                });
            }
            if !tl.loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    trajectory: j,
                    step: 0,
                    value: tl.loss,
                });
            }
            for g in tl.head_grads.data_mut() {
                *g *= scale;
            }
            self.net
                .backward_accumulate(&tl.cache, &tl.head_grads, &mut grads)?;
            stats.loss += scale * tl.loss;
            stats.mean_sigma += scale * tl.mean_sigma;
            stats.mean_abs_residual += scale * tl.abs_residual;
        }
        adam_step(&mut self.net, &grads, &mut self.adam, learning_rate)?;
        Ok(stats)
    }

    /// Network checkpoint preceded by the family tag and σ bounds.
    ///
    /// ```text
    /// reward-model v1
    /// family <gaussian|skew_normal|fixed_sigma_mse>
    /// sigma_bounds <min> <max>
    /// <dense-net record>
    /// ```
    pub fn write_checkpoint<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "reward-model v1")?;
        writeln!(out, "family {}", self.family.name())?;
        writeln!(out, "sigma_bounds {:?} {:?}", self.bounds.min, self.bounds.max)?;
        self.net.write_checkpoint(out)
    }

    pub fn read_checkpoint<R: BufRead>(input: &mut R) -> Result<Self> {
        let mut line = String::new();
        let mut read_line = |input: &mut R| -> Result<String> {
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Err(Error::Checkpoint("unexpected end of file".into()));
            }
            Ok(line.trim().to_string())
        };
        if read_line(input)? != "reward-model v1" {
            return Err(Error::Checkpoint("bad reward-model header".into()));
        }
        let fam = read_line(input)?;
        let family = fam
            .strip_prefix("family ")
            .and_then(Family::from_name)
            .ok_or_else(|| Error::Checkpoint(format!("bad family line `{fam}`")))?;
        let b = read_line(input)?;
        let vals: Vec<f64> = b
            .strip_prefix("sigma_bounds ")
            .ok_or_else(|| Error::Checkpoint(format!("bad sigma_bounds line `{b}`")))?
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Checkpoint(format!("sigma bounds: {e}")))?;
        if vals.len() != 2 {
            return Err(Error::Checkpoint("sigma_bounds needs two values".into()));
        }
        let net = DenseNet::read_checkpoint(input)?;
        Self::from_net(
            family,
            net,
            SigmaBounds {
                min: vals[0],
                max: vals[1],
            },
        )
    }
}
