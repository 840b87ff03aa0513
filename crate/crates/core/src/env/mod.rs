//! Small continuous-control environments with dense rewards, and the wrapper
//! that turns them into episodic-reward tasks.

mod delayed_chain;
mod episodic;
mod pendulum;
mod point_mass;

use crate::error::{Error, Result};

pub use delayed_chain::DelayedChain;
pub use episodic::{EpisodicStep, EpisodicWrapper};
pub use pendulum::Pendulum;
pub use point_mass::PointMass2D;

/// Integration step shared by all environments (explicit Euler).
pub const DT: f64 = 0.05;

pub const DEFAULT_HORIZON: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: &'static str,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_length: usize,
}

impl EnvSpec {
    /// Maps `a ∈ [-1, 1]^d` affinely onto the action bounds.
    pub fn scale_action(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(a, (lo, hi))| lo + (a + 1.0) * 0.5 * (hi - lo))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode; the initial state depends only on `seed`.
    fn reset(&mut self, seed: u64) -> Vec<f64>;

    /// Advances one step. Out-of-bound actions are clipped and counted.
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;

    /// Number of action components clipped so far.
    fn clipped_actions(&self) -> u64;
}

/// Built-in environments selectable by name.
pub const ENV_NAMES: [&str; 3] = ["point_mass", "pendulum", "delayed_chain"];

pub fn make_env(name: &str, horizon: usize) -> Result<Box<dyn Environment>> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    match name {
        "point_mass" => Ok(Box::new(PointMass2D::new(horizon))),
        "pendulum" => Ok(Box::new(Pendulum::new(horizon))),
        "delayed_chain" => Ok(Box::new(DelayedChain::new(horizon))),
        other => Err(Error::Domain(format!(
            "unknown environment `{other}` (expected one of {ENV_NAMES:?})"
        ))),
    }
}

/// Episode bookkeeping shared by the environments: step counter, the
/// started/finished contract, and action clipping.
#[derive(Debug, Clone, Default)]
pub(crate) struct EpisodeClock {
    t: usize,
    active: bool,
    clipped: u64,
}

impl EpisodeClock {
    pub fn start(&mut self) {
        self.t = 0;
        self.active = true;
    }

    pub fn clip_action(&mut self, spec: &EnvSpec, action: &[f64]) -> Result<Vec<f64>> {
        if !self.active {
            return Err(Error::Contract(
                "step called on a finished or un-reset episode".into(),
            ));
        }
        if action.len() != spec.action_dim {
            return Err(Error::Shape(format!(
                "action has {} components, {} expects {}",
                action.len(),
                spec.name,
                spec.action_dim
            )));
        }
        let mut out = Vec::with_capacity(action.len());
        for (i, &a) in action.iter().enumerate() {
            if a.is_nan() {
                return Err(Error::Domain(format!("action component {i} is NaN")));
            }
            let c = a.clamp(spec.action_low[i], spec.action_high[i]);
            if c != a {
                self.clipped += 1;
            }
            out.push(c);
        }
        Ok(out)
    }

    /// Counts the step and returns `(terminated, truncated)`.
    pub fn finish_step(&mut self, spec: &EnvSpec, terminal: bool) -> (bool, bool) {
        self.t += 1;
        let truncated = !terminal && self.t >= spec.max_episode_length;
        if terminal || truncated {
            self.active = false;
        }
        (terminal, truncated)
    }

    pub fn clipped(&self) -> u64 {
        self.clipped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_is_rejected() {
        assert!(make_env("cartpole", 10).is_err());
        assert!(make_env("point_mass", 0).is_err());
    }

    #[test]
    fn horizon_truncates_without_terminating() {
        for name in ENV_NAMES {
            let mut env = make_env(name, 5).unwrap();
            env.reset(3);
            let zero = vec![0.0; env.spec().action_dim];
            let mut last = None;
            for _ in 0..5 {
                let r = env.step(&zero).unwrap();
                last = Some(r.clone());
                if r.terminated {
                    break;
                }
            }
            let last = last.unwrap();
            assert!(!(last.terminated && last.truncated));
            assert!(last.terminated || last.truncated, "{name}");
            assert!(matches!(env.step(&zero), Err(Error::Contract(_))));
        }
    }

    #[test]
    fn step_before_reset_is_a_contract_error() {
        let mut env = make_env("pendulum", 10).unwrap();
        assert!(matches!(env.step(&[0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn clipping_is_counted() {
        let mut env = make_env("point_mass", 10).unwrap();
        env.reset(0);
        env.step(&[3.0, -0.5]).unwrap();
        env.step(&[-3.0, 9.0]).unwrap();
        assert_eq!(env.clipped_actions(), 3);
    }

    #[test]
    fn scale_action_hits_bounds() {
        let env = make_env("pendulum", 10).unwrap();
        assert_eq!(env.spec().scale_action(&[-1.0]), vec![-2.0]);
        assert_eq!(env.spec().scale_action(&[1.0]), vec![2.0]);
        assert_eq!(env.spec().scale_action(&[0.0]), vec![0.0]);
    }
}
