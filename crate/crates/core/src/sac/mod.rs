//! Soft Actor-Critic learner and the replay machinery that feeds it
//! redistributed rewards.

mod agent;
mod replay;

pub use agent::{
    polyak_update, ActorGrads, CriticGrads, PolicySample, SacAgent, SacConfig, SacLosses,
};
pub use replay::{Batch, ReplayBuffer, Transition};

use crate::error::{Error, Result};
use crate::reward_model::{RewardModel, Trajectory};

/// A finished episode as collected, before any reward relabeling.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeRecord {
    pub states: Vec<Vec<f64>>,
    /// Normalized actions in `[-1, 1]^d`.
    pub actions: Vec<Vec<f64>>,
    pub next_states: Vec<Vec<f64>>,
    pub inner_rewards: Vec<f64>,
    pub emitted_rewards: Vec<f64>,
    /// True only when the final step terminated (not truncated).
    pub terminated: bool,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The emitted reward of the final step.
    pub fn episodic_return(&self) -> f64 {
        self.emitted_rewards.last().copied().unwrap_or(0.0)
    }

    pub fn to_trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(
            self.states
                .iter()
                .cloned()
                .zip(self.actions.iter().cloned())
                .collect(),
            self.episodic_return(),
        )
    }
}

/// Where stored rewards come from.
#[derive(Debug, Clone, Copy)]
pub enum RewardSource<'a> {
    /// Emitted episodic rewards: zero except at the final step.
    Sparse,
    /// The environment's true dense rewards.
    Oracle,
    /// `μ(s_t, a_t)` of a reward model.
    Model(&'a RewardModel),
}

/// Stores every transition of `episode` with rewards from `source`, returning
/// the stored rewards.
pub fn relabel_and_store(
    buffer: &mut ReplayBuffer,
    episode: &EpisodeRecord,
    source: RewardSource<'_>,
) -> Result<Vec<f64>> {
    let len = episode.len();
    if len == 0 {
        return Err(Error::Contract("cannot store an empty episode".into()));
    }
    let rewards = match source {
        RewardSource::Sparse => episode.emitted_rewards.clone(),
        RewardSource::Oracle => episode.inner_rewards.clone(),
        RewardSource::Model(model) => model.redistribute(&episode.to_trajectory()?)?,
    };
    for t in 0..len {
        buffer.push(Transition {
            state: episode.states[t].clone(),
            action: episode.actions[t].clone(),
            reward: rewards[t],
            next_state: episode.next_states[t].clone(),
            done: episode.terminated && t + 1 == len,
        });
    }
    Ok(rewards)
}
