use super::{EnvSpec, Environment};
use crate::error::Result;

/// One wrapped step: the emitted (episodic) reward plus the inner dense
/// reward it replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicStep {
    pub next_state: Vec<f64>,
    /// Zero before the final step; the summed inner reward at the final step.
    pub reward: f64,
    pub inner_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

impl EpisodicStep {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Withholds rewards until the episode ends, then pays their sum.
///
/// Truncation at the horizon pays out exactly like termination.
pub struct EpisodicWrapper<E> {
    inner: E,
    accumulated_return: f64,
}

impl<E: Environment> EpisodicWrapper<E> {
    pub fn new(inner: E) -> Self {
        Self {
            inner,
            accumulated_return: 0.0,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        self.inner.spec()
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn accumulated_return(&self) -> f64 {
        self.accumulated_return
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.accumulated_return = 0.0;
        self.inner.reset(seed)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<EpisodicStep> {
        let r = self.inner.step(action)?;
        self.accumulated_return += r.reward;
        let done = r.terminated || r.truncated;
        Ok(EpisodicStep {
            next_state: r.next_state,
            reward: if done { self.accumulated_return } else { 0.0 },
            inner_reward: r.reward,
            terminated: r.terminated,
            truncated: r.truncated,
        })
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> &EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        (**self).reset(seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<super::StepResult> {
        (**self).step(action)
    }

    fn clipped_actions(&self) -> u64 {
        (**self).clipped_actions()
    }
}
