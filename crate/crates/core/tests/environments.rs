use lrr::env::{make_env, Environment, EpisodicWrapper, ENV_NAMES};
use proptest::prelude::*;

fn rollout(name: &str, horizon: usize, seed: u64, actions: &[f64]) -> Vec<(Vec<f64>, f64, bool, bool)> {
    let mut env = make_env(name, horizon).unwrap();
    let dim = env.spec().action_dim;
    env.reset(seed);
    let mut out = Vec::new();
    for chunk in actions.chunks(dim).filter(|c| c.len() == dim) {
        let r = env.step(chunk).unwrap();
        let done = r.terminated || r.truncated;
        out.push((r.next_state, r.reward, r.terminated, r.truncated));
        if done {
            break;
        }
    }
    out
}

#[test]
fn unknown_environment_is_rejected() {
    assert!(make_env("mujoco_humanoid", 100).is_err());
}

#[test]
fn stepping_after_the_end_is_a_contract_error() {
    for name in ENV_NAMES {
        let mut env = make_env(name, 3).unwrap();
        let a = vec![0.0; env.spec().action_dim];
        env.reset(1);
        for _ in 0..3 {
            env.step(&a).unwrap();
        }
        assert!(env.step(&a).is_err(), "{name}");
        env.reset(1);
        assert!(env.step(&a).is_ok());
    }
}

#[test]
fn out_of_range_actions_are_clipped_and_counted() {
    let mut env = make_env("pendulum", 10).unwrap();
    env.reset(0);
    env.step(&[5.0]).unwrap();
    env.step(&[1.0]).unwrap();
    env.step(&[-7.0]).unwrap();
    assert_eq!(env.clipped_actions(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_seed_and_actions_repeat_bitwise(
        env_idx in 0usize..3,
        seed in any::<u64>(),
        actions in prop::collection::vec(-3.0f64..3.0, 0..120),
    ) {
        let name = ENV_NAMES[env_idx];
        let a = rollout(name, 40, seed, &actions);
        let b = rollout(name, 40, seed, &actions);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn wrapper_conserves_the_return_and_respects_the_horizon(
        env_idx in 0usize..3,
        seed in any::<u64>(),
        horizon in 1usize..60,
        actions in prop::collection::vec(-2.5f64..2.5, 120),
    ) {
        let inner = make_env(ENV_NAMES[env_idx], horizon).unwrap();
        let dim = inner.spec().action_dim;
        let mut env = EpisodicWrapper::new(inner);
        env.reset(seed);
        let mut sum = 0.0;
        let mut steps = 0;
        let mut k = 0;
        loop {
            let a: Vec<f64> = (0..dim).map(|j| actions[(k + j) % actions.len()]).collect();
            k += dim;
            let r = env.step(&a).unwrap();
            steps += 1;
            sum += r.inner_reward;
            prop_assert!(!(r.terminated && r.truncated));
            if r.done() {
                prop_assert!((r.reward - sum).abs() <= 1e-12);
                break;
            }
            prop_assert_eq!(r.reward, 0.0);
        }
        prop_assert!(steps <= horizon);
    }
}
