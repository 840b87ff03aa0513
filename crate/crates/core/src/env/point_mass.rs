use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, EpisodeClock, StepResult, DT};
use crate::error::Result;

pub const GOAL: [f64; 2] = [0.5, 0.5];
pub const ARENA: f64 = 2.0;
pub const MAX_SPEED: f64 = 2.0;

/// Point mass in the plane driven by a bounded acceleration.
///
/// State `(x, y, vx, vy)`; action `(ax, ay) ∈ [-1, 1]²`. Euler update
/// `p ← p + dt·v`, `v ← v + dt·a`, speed clipped to `MAX_SPEED` per axis,
/// position confined to `[-ARENA, ARENA]²` (hitting a wall zeroes that
/// velocity component). Reward `-‖p' - GOAL‖` on the post-step position.
#[derive(Debug, Clone)]
pub struct PointMass2D {
    spec: EnvSpec,
    state: [f64; 4],
    clock: EpisodeClock,
}

impl PointMass2D {
    pub fn new(horizon: usize) -> Self {
        Self {
            spec: EnvSpec {
                name: "point_mass",
                state_dim: 4,
                action_dim: 2,
                action_low: vec![-1.0; 2],
                action_high: vec![1.0; 2],
                max_episode_length: horizon,
            },
            state: [0.0; 4],
            clock: EpisodeClock::default(),
        }
    }

    /// Places the mass at `position` with zero velocity and starts an episode.
    pub fn reset_to(&mut self, position: [f64; 2]) -> Vec<f64> {
        self.state = [position[0], position[1], 0.0, 0.0];
        self.clock.start();
        self.state.to_vec()
    }

    pub fn distance_to_goal(position: [f64; 2]) -> f64 {
        ((position[0] - GOAL[0]).powi(2) + (position[1] - GOAL[1]).powi(2)).sqrt()
    }
}

impl Environment for PointMass2D {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = rng.random_range(-1.0..=1.0);
        let y = rng.random_range(-1.0..=1.0);
        self.reset_to([x, y])
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let a = self.clock.clip_action(&self.spec, action)?;
        let [x, y, vx, vy] = self.state;
        let mut next = [
            x + DT * vx,
            y + DT * vy,
            (vx + DT * a[0]).clamp(-MAX_SPEED, MAX_SPEED),
            (vy + DT * a[1]).clamp(-MAX_SPEED, MAX_SPEED),
        ];
        for axis in 0..2 {
            if next[axis].abs() > ARENA {
                next[axis] = next[axis].clamp(-ARENA, ARENA);
                next[axis + 2] = 0.0;
            }
        }
        self.state = next;
        let reward = -Self::distance_to_goal([next[0], next[1]]);
        let (terminated, truncated) = self.clock.finish_step(&self.spec, false);
        Ok(StepResult {
            next_state: next.to_vec(),
            reward,
            terminated,
            truncated,
        })
    }

    fn clipped_actions(&self) -> u64 {
        self.clock.clipped()
    }
}
