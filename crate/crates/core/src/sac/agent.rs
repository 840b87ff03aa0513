//! Soft Actor-Critic with a tanh-squashed Gaussian policy, twin critics,
//! polyak-averaged targets and an automatically tuned temperature.
//!
//! Actions are handled in the normalized box `[-1, 1]^d`; the environment
//! bounds are applied only when an action leaves the agent.

use rand::Rng;
use rand_distr::StandardNormal;

use super::replay::Batch;
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, DenseNet, ForwardCache, Matrix};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub gamma: f64,
    pub tau: f64,
    pub initial_temperature: f64,
    /// Defaults to `-action_dim` when `None`.
    pub target_entropy: Option<f64>,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            learning_rate: 3e-4,
            gamma: 0.99,
            tau: 0.005,
            initial_temperature: 1.0,
            target_entropy: None,
            log_std_min: -20.0,
            log_std_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SacLosses {
    pub critic: f64,
    pub actor: f64,
    pub alpha: f64,
}

/// Reparameterized policy draw for a batch of states.
#[derive(Debug, Clone)]
pub struct PolicySample {
    /// `tanh(mean + std·ε)`, one row per state.
    pub actions: Matrix,
    pub log_probs: Vec<f64>,
    pub mean: Matrix,
    /// Clamped log standard deviation.
    pub log_std: Matrix,
    /// Whether the raw log-std lay inside the clamp range.
    log_std_free: Vec<bool>,
    noise: Matrix,
    cache: ForwardCache,
}

/// Critic loss with the gradients of both online critics.
#[derive(Debug, Clone)]
pub struct CriticGrads {
    pub loss: f64,
    pub targets: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ActorGrads {
    pub loss: f64,
    pub grads: Vec<f64>,
    pub log_probs: Vec<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)²)` without cancellation.
fn ln_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    state_dim: usize,
    action_dim: usize,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    cfg: SacConfig,
    actor: DenseNet,
    q1: DenseNet,
    q2: DenseNet,
    q1_target: DenseNet,
    q2_target: DenseNet,
    log_alpha: f64,
    actor_adam: AdamState,
    q1_adam: AdamState,
    q2_adam: AdamState,
    alpha_adam: AdamState,
}

impl SacAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_low: &[f64],
        action_high: &[f64],
        cfg: SacConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let action_dim = action_low.len();
        if action_high.len() != action_dim || action_dim == 0 {
            return Err(Error::Shape("action bounds must be non-empty and paired".into()));
        }
        if action_low.iter().zip(action_high).any(|(l, h)| !(l < h)) {
            return Err(Error::Domain("action bounds need low < high".into()));
        }
        if !(cfg.initial_temperature > 0.0) {
            return Err(Error::Domain("initial temperature must be positive".into()));
        }
        let mut actor_sizes = vec![state_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(2 * action_dim);
        let mut critic_sizes = vec![state_dim + action_dim];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);

        let actor = DenseNet::new(&actor_sizes, rng)?;
        let q1 = DenseNet::new(&critic_sizes, rng)?;
        let q2 = DenseNet::new(&critic_sizes, rng)?;
        Ok(Self {
            state_dim,
            action_dim,
            action_low: action_low.to_vec(),
            action_high: action_high.to_vec(),
            log_alpha: cfg.initial_temperature.ln(),
            actor_adam: AdamState::new(actor.num_params()),
            q1_adam: AdamState::new(q1.num_params()),
            q2_adam: AdamState::new(q2.num_params()),
            alpha_adam: AdamState::new(1),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            cfg,
        })
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut DenseNet {
        &mut self.actor
    }

    pub fn critics(&self) -> (&DenseNet, &DenseNet) {
        (&self.q1, &self.q2)
    }

    pub fn critics_mut(&mut self) -> (&mut DenseNet, &mut DenseNet) {
        (&mut self.q1, &mut self.q2)
    }

    pub fn targets(&self) -> (&DenseNet, &DenseNet) {
        (&self.q1_target, &self.q2_target)
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn set_log_alpha(&mut self, value: f64) {
        self.log_alpha = value;
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn target_entropy(&self) -> f64 {
        self.cfg
            .target_entropy
            .unwrap_or(-(self.action_dim as f64))
    }

    /// Replaces the policy network, e.g. from a checkpoint.
    pub fn set_actor(&mut self, actor: DenseNet) -> Result<()> {
        if actor.layer_sizes() != self.actor.layer_sizes() {
            return Err(Error::Shape(format!(
                "actor layers {:?} do not match {:?}",
                actor.layer_sizes(),
                self.actor.layer_sizes()
            )));
        }
        self.actor_adam = AdamState::new(actor.num_params());
        self.actor = actor;
        Ok(())
    }

    pub fn scale_action(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(a, (lo, hi))| lo + (a + 1.0) * 0.5 * (hi - lo))
            .collect()
    }

    /// Normalized action in `(-1, 1)^d`: the squashed mean when
    /// `deterministic`, otherwise a squashed Gaussian draw.
    pub fn select_normalized<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if state.len() != self.state_dim {
            return Err(Error::Shape(format!(
                "state has {} entries, agent expects {}",
                state.len(),
                self.state_dim
            )));
        }
        let (out, _) = self.actor.forward(state)?;
        let (mean, log_std) = out.split_at(self.action_dim);
        // tanh rounds to ±1 for large arguments; keep actions strictly inside.
        let edge = 1.0 - 1e-9;
        Ok(mean
            .iter()
            .zip(log_std)
            .map(|(&m, &ls)| {
                if deterministic {
                    m.tanh()
                } else {
                    let eps: f64 = rng.sample(StandardNormal);
                    let s = ls.clamp(self.cfg.log_std_min, self.cfg.log_std_max).exp();
                    (m + s * eps).tanh()
                }
                .clamp(-edge, edge)
            })
            .collect())
    }

    /// Action in environment units.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        deterministic: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let a = self.select_normalized(state, deterministic, rng)?;
        Ok(self.scale_action(&a))
    }

    /// Policy draw for every row of `states` with the given standard-normal noise.
    pub fn sample_policy(&self, states: &Matrix, noise: &Matrix) -> Result<PolicySample> {
        let (out, cache) = self.actor.forward_batch(states)?;
        let (b, d) = (states.rows(), self.action_dim);
        if noise.rows() != b || noise.cols() != d {
            return Err(Error::Shape(format!(
                "policy noise is {}x{}, expected {b}x{d}",
                noise.rows(),
                noise.cols()
            )));
        }
        let mean = out.columns(0, d);
        let raw_log_std = out.columns(d, 2 * d);
        let mut log_std = raw_log_std.clone();
        let mut free = vec![true; b * d];
        for (k, v) in log_std.data_mut().iter_mut().enumerate() {
            let c = v.clamp(self.cfg.log_std_min, self.cfg.log_std_max);
            free[k] = c == *v;
            *v = c;
        }
        let mut actions = Matrix::zeros(b, d);
        let mut log_probs = vec![0.0; b];
        for r in 0..b {
            let mut lp = 0.0;
            for j in 0..d {
                let eps = noise.get(r, j);
                let ls = log_std.get(r, j);
                let u = mean.get(r, j) + ls.exp() * eps;
                actions.set(r, j, u.tanh());
                lp += -0.5 * eps * eps - ls - HALF_LN_2PI - ln_one_minus_tanh_sq(u);
            }
            log_probs[r] = lp;
        }
        Ok(PolicySample {
            actions,
            log_probs,
            mean,
            log_std,
            log_std_free: free,
            noise: noise.clone(),
            cache,
        })
    }

    /// Soft Bellman targets `r + γ(1-d)(min Q̄(s', a') - α log π(a'|s'))`.
    pub fn critic_targets(&self, batch: &Batch, next_noise: &Matrix) -> Result<Vec<f64>> {
        let next = self.sample_policy(&batch.next_states, next_noise)?;
        let input = batch.next_states.hstack(&next.actions)?;
        let (t1, _) = self.q1_target.forward_batch(&input)?;
        let (t2, _) = self.q2_target.forward_batch(&input)?;
        let alpha = self.alpha();
        Ok((0..batch.len())
            .map(|k| {
                if batch.dones[k] {
                    batch.rewards[k]
                } else {
                    let soft_v = t1.get(k, 0).min(t2.get(k, 0)) - alpha * next.log_probs[k];
                    batch.rewards[k] + self.cfg.gamma * soft_v
                }
            })
            .collect())
    }

    /// `Σ_{i∈{1,2}} ½·mean((Q_i(s, a) - y)²)` with fixed targets `y`.
    pub fn critic_loss_grads(&self, batch: &Batch, next_noise: &Matrix) -> Result<CriticGrads> {
        let targets = self.critic_targets(batch, next_noise)?;
        let input = batch.states.hstack(&batch.actions)?;
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(2);
        for net in [&self.q1, &self.q2] {
            let (q, cache) = net.forward_batch(&input)?;
            let mut dq = Matrix::zeros(batch.len(), 1);
            for k in 0..batch.len() {
                let res = q.get(k, 0) - targets[k];
                loss += 0.5 * res * res / n;
                dq.set(k, 0, res / n);
            }
            let (g, _) = net.backward(&cache, &dq)?;
            grads.push(g);
        }
        let q2 = grads.pop().unwrap();
        let q1 = grads.pop().unwrap();
        Ok(CriticGrads {
            loss,
            targets,
            q1,
            q2,
        })
    }

    /// `mean(α log π(a|s) - min_i Q_i(s, a))` with `a` reparameterized by `noise`.
    pub fn actor_loss_grads(&self, states: &Matrix, noise: &Matrix) -> Result<ActorGrads> {
        let ps = self.sample_policy(states, noise)?;
        let (b, d, sd) = (states.rows(), self.action_dim, self.state_dim);
        let input = states.hstack(&ps.actions)?;
        let (o1, c1) = self.q1.forward_batch(&input)?;
        let (o2, c2) = self.q2.forward_batch(&input)?;
        let alpha = self.alpha();
        let n = b as f64;

        let mut sel1 = Matrix::zeros(b, 1);
        let mut sel2 = Matrix::zeros(b, 1);
        let mut loss = 0.0;
        for k in 0..b {
            let (a, c) = (o1.get(k, 0), o2.get(k, 0));
            if a <= c {
                sel1.set(k, 0, 1.0);
            } else {
                sel2.set(k, 0, 1.0);
            }
            loss += (alpha * ps.log_probs[k] - a.min(c)) / n;
        }
        let mut scratch = vec![0.0; self.q1.num_params()];
        let dx1 = self.q1.backward_accumulate(&c1, &sel1, &mut scratch)?;
        let dx2 = self.q2.backward_accumulate(&c2, &sel2, &mut scratch)?;

        let mut head_grad = Matrix::zeros(b, 2 * d);
        for k in 0..b {
            for j in 0..d {
                let dq_da = dx1.get(k, sd + j) + dx2.get(k, sd + j);
                let a = ps.actions.get(k, j);
                let da_du = 1.0 - a * a;
                let s = ps.log_std.get(k, j).exp();
                let eps = ps.noise.get(k, j);
                let d_mean = alpha * 2.0 * a - dq_da * da_du;
                let d_log_std = alpha * (-1.0 + 2.0 * a * s * eps) - dq_da * da_du * s * eps;
                head_grad.set(k, j, d_mean / n);
                if ps.log_std_free[k * d + j] {
                    head_grad.set(k, d + j, d_log_std / n);
                }
            }
        }
        let (grads, _) = self.actor.backward(&ps.cache, &head_grad)?;
        Ok(ActorGrads {
            loss,
            grads,
            log_probs: ps.log_probs,
        })
    }

    /// `-log α · mean(log π + H̄)` and its derivative in `log α`.
    pub fn alpha_loss_grad(&self, log_probs: &[f64]) -> (f64, f64) {
        let h = self.target_entropy();
        let m = log_probs.iter().map(|lp| lp + h).sum::<f64>() / log_probs.len() as f64;
        (-self.log_alpha * m, -m)
    }

    /// One critic step, one actor step, one temperature step, then polyak
    /// averaging of both target critics.
    pub fn sac_update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<SacLosses> {
        let lr = self.cfg.learning_rate;
        let (b, d) = (batch.len(), self.action_dim);
        let next_noise = standard_normal_matrix(b, d, rng);
        let critic = self.critic_loss_grads(batch, &next_noise)?;
        if !critic.loss.is_finite() {
            return Err(Error::Domain(format!("critic loss is {}", critic.loss)));
        }
        adam_step(&mut self.q1, &critic.q1, &mut self.q1_adam, lr)?;
        adam_step(&mut self.q2, &critic.q2, &mut self.q2_adam, lr)?;

        let noise = standard_normal_matrix(b, d, rng);
        let actor = self.actor_loss_grads(&batch.states, &noise)?;
        if !actor.loss.is_finite() {
            return Err(Error::Domain(format!("actor loss is {}", actor.loss)));
        }
        adam_step(&mut self.actor, &actor.grads, &mut self.actor_adam, lr)?;

        let (alpha_loss, alpha_grad) = self.alpha_loss_grad(&actor.log_probs);
        if !alpha_loss.is_finite() {
            return Err(Error::Domain(format!("temperature loss is {alpha_loss}")));
        }
        let mut la = [self.log_alpha];
        self.alpha_adam.step(&mut la, &[alpha_grad], lr)?;
        self.log_alpha = la[0];

        polyak_update(&mut self.q1_target, &self.q1, self.cfg.tau)?;
        polyak_update(&mut self.q2_target, &self.q2, self.cfg.tau)?;
        Ok(SacLosses {
            critic: critic.loss,
            actor: actor.loss,
            alpha: alpha_loss,
        })
    }
}

pub(crate) fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized by construction")
}

/// `target ← target + tau·(online - target)`, elementwise.
pub fn polyak_update(target: &mut DenseNet, online: &DenseNet, tau: f64) -> Result<()> {
    if target.layer_sizes() != online.layer_sizes() {
        return Err(Error::Shape(format!(
            "polyak: target layers {:?} vs online {:?}",
            target.layer_sizes(),
            online.layer_sizes()
        )));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain(format!("polyak tau must be in [0, 1], got {tau}")));
    }
    let params = target.params_mut();
    if tau == 1.0 {
        params.copy_from_slice(online.params());
        return Ok(());
    }
    for (t, o) in params.iter_mut().zip(online.params()) {
        *t += tau * (o - *t);
    }
    Ok(())
}
