use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvSpec, Environment, EpisodeClock, StepResult, DT};
use crate::error::Result;

const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;

/// Torque-driven pendulum swing-up.
///
/// Observation `(cos θ, sin θ, θ̇)`, θ = 0 upright. Dynamics
/// `θ̈ = 3g/(2l)·sin θ + 3/(m l²)·u`, Euler-integrated with `θ̇` clipped to
/// `±MAX_SPEED`. Reward `-(θ² + 0.1 θ̇² + 0.001 u²)` with θ wrapped to
/// `[-π, π)`, evaluated on the pre-step state.
#[derive(Debug, Clone)]
pub struct Pendulum {
    spec: EnvSpec,
    theta: f64,
    theta_dot: f64,
    clock: EpisodeClock,
}

fn wrap_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

impl Pendulum {
    pub fn new(horizon: usize) -> Self {
        Self {
            spec: EnvSpec {
                name: "pendulum",
                state_dim: 3,
                action_dim: 1,
                action_low: vec![-MAX_TORQUE],
                action_high: vec![MAX_TORQUE],
                max_episode_length: horizon,
            },
            theta: 0.0,
            theta_dot: 0.0,
            clock: EpisodeClock::default(),
        }
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot]
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.theta = rng.random_range(-PI..PI);
        self.theta_dot = rng.random_range(-1.0..1.0);
        self.clock.start();
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        let u = self.clock.clip_action(&self.spec, action)?[0];
        let th = wrap_angle(self.theta);
        let reward = -(th * th + 0.1 * self.theta_dot * self.theta_dot + 0.001 * u * u);
        let accel = 3.0 * GRAVITY / (2.0 * LENGTH) * self.theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u;
        self.theta += DT * self.theta_dot;
        self.theta_dot = (self.theta_dot + DT * accel).clamp(-MAX_SPEED, MAX_SPEED);
        let (terminated, truncated) = self.clock.finish_step(&self.spec, false);
        Ok(StepResult {
            next_state: self.observation(),
            reward,
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
    fn upright_and_still_is_zero_reward() {
        let mut env = Pendulum::new(10);
        env.reset(0);
        env.theta = 0.0;
        env.theta_dot = 0.0;
        let r = env.step(&[0.0]).unwrap();
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.next_state, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn angle_wraps() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-0.25) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn speed_is_bounded() {
        let mut env = Pendulum::new(1000);
        env.reset(1);
        for _ in 0..500 {
            let r = env.step(&[2.0]).unwrap();
            assert!(r.next_state[2].abs() <= MAX_SPEED);
        }
    }
}
