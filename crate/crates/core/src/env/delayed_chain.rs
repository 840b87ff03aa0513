use super::{EnvSpec, Environment, EpisodeClock, StepResult};
use crate::error::Result;

pub const NUM_CELLS: usize = 6;
pub const GOAL_CELL: usize = 3;
pub const KEY_CELL: usize = NUM_CELLS - 1;

/// One-dimensional key-and-door corridor.
///
/// The agent starts in cell 0 without the key. The action `a ∈ [-1, 1]`
/// moves one cell left (`a < -1/3`), right (`a > 1/3`) or nowhere; walls
/// block movement past either end. Entering `KEY_CELL` picks up the key.
/// Entering `GOAL_CELL` while holding the key terminates the episode with
/// reward 1; every other step pays 0.
///
/// Observation: `(cell / (NUM_CELLS - 1), has_key)`.
#[derive(Debug, Clone)]
pub struct DelayedChain {
    spec: EnvSpec,
    cell: usize,
    has_key: bool,
    clock: EpisodeClock,
}

impl DelayedChain {
    pub fn new(horizon: usize) -> Self {
        Self {
            spec: EnvSpec {
                name: "delayed_chain",
                state_dim: 2,
                action_dim: 1,
                action_low: vec![-1.0],
                action_high: vec![1.0],
                max_episode_length: horizon,
            },
            cell: 0,
            has_key: false,
            clock: EpisodeClock::default(),
        }
    }

    fn observation(&self) -> Vec<f64> {
        vec![
            self.cell as f64 / (NUM_CELLS - 1) as f64,
            if self.has_key { 1.0 } else { 0.0 },
        ]
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn has_key(&self) -> bool {
        self.has_key
    }
}

impl Environment for DelayedChain {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Deterministic start; the seed is accepted for interface uniformity.
    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.cell = 0;
        self.has_key = false;
        self.clock.start();
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let a = self.clock.clip_action(&self.spec, action)?[0];
        if a > 1.0 / 3.0 {
            self.cell = (self.cell + 1).min(NUM_CELLS - 1);
        } else if a < -1.0 / 3.0 {
            self.cell = self.cell.saturating_sub(1);
        }
        if self.cell == KEY_CELL {
            self.has_key = true;
        }
        let reached = self.has_key && self.cell == GOAL_CELL;
        let (terminated, truncated) = self.clock.finish_step(&self.spec, reached);
        Ok(StepResult {
            next_state: self.observation(),
            reward: if reached { 1.0 } else { 0.0 },
            terminated,
            truncated,
        })
    }

    fn clipped_actions(&self) -> u64 {
        self.clock.clipped()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_state() {
        let mut env = DelayedChain::new(50);
        assert_eq!(env.reset(9), vec![0.0, 0.0]);
        assert_eq!(env.cell(), 0);
        assert!(!env.has_key());
    }

    #[test]
    fn goal_without_key_does_nothing() {
        let mut env = DelayedChain::new(50);
        env.reset(0);
        for _ in 0..GOAL_CELL {
            let r = env.step(&[1.0]).unwrap();
            assert_eq!(r.reward, 0.0);
            assert!(!r.terminated);
        }
        assert_eq!(env.cell(), GOAL_CELL);
    }

    #[test]
    fn key_then_goal_terminates_with_unit_reward() {
        let mut env = DelayedChain::new(50);
        env.reset(0);
        let mut rewards = Vec::new();
        for _ in 0..KEY_CELL {
            rewards.push(env.step(&[1.0]).unwrap().reward);
        }
        assert!(env.has_key());
        let mut last = None;
        for _ in 0..(KEY_CELL - GOAL_CELL) {
            let r = env.step(&[-1.0]).unwrap();
            rewards.push(r.reward);
            last = Some(r);
        }
        let last = last.unwrap();
        assert!(last.terminated && !last.truncated);
        assert_eq!(rewards.iter().sum::<f64>(), 1.0);
        assert_eq!(*rewards.last().unwrap(), 1.0);
    }
}
