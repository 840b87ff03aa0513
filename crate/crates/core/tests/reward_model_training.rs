use lrr::nn::DenseNet;
use lrr::reward_model::{
    gaussian_nll, loo_return, mse_rd_loss, optimal_sigma_skew, skew_normal_nll, trajectory_loss,
    trajectory_loss_with_noise, Family, NoiseTable, RewardDistributionParams, RewardModel,
    SigmaBounds, Trajectory, TrajectoryBuffer,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trajectory(rng: &mut ChaCha8Rng, len: usize, ret: f64) -> Trajectory {
    let steps = (0..len)
        .map(|_| {
            (
                (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
        })
        .collect();
    Trajectory::new(steps, ret).unwrap()
}

fn model(family: Family, hidden: usize, seed: u64) -> RewardModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RewardModel::new(family, 3, 2, &[hidden, hidden], &mut rng).unwrap()
}

#[test]
fn gaussian_loss_trends_down_on_a_fixed_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let traj = trajectory(&mut rng, 10, 3.0);
    let mut m = model(Family::Gaussian, 32, 2);
    let losses: Vec<f64> = (0..500)
        .map(|_| m.train_step(&[&traj], 1e-3, &mut rng).unwrap().loss)
        .collect();
    let windows: Vec<f64> = losses.chunks(100).map(|c| c.iter().sum::<f64>() / 100.0).collect();
    for w in windows.windows(2) {
        assert!(w[1] <= w[0], "trailing-100 averages {windows:?}");
    }
}

#[test]
fn fixed_sigma_fit_matches_the_return() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let traj = trajectory(&mut rng, 8, 4.5);
    let mut m = model(Family::FixedSigmaMse, 16, 4);
    for _ in 0..2000 {
        m.train_step(&[&traj], 1e-3, &mut rng).unwrap();
    }
    let total: f64 = m.redistribute(&traj).unwrap().iter().sum();
    assert!((total - 4.5).abs() < 1e-2, "sum of mu = {total}");
    assert!(mse_rd_loss(&m, &traj).unwrap() < 1e-4);
}

#[test]
fn fixed_sigma_fit_from_a_buffer_of_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut buffer = TrajectoryBuffer::new(1000);
    buffer.push(trajectory(&mut rng, 6, -2.0));
    let mut m = model(Family::FixedSigmaMse, 16, 6);
    for _ in 0..2000 {
        let batch = buffer.sample(4, &mut rng);
        m.train_step(&batch, 1e-3, &mut rng).unwrap();
    }
    let traj = buffer.sample(1, &mut rng)[0].clone();
    let total: f64 = m.redistribute(&traj).unwrap().iter().sum();
    assert!((total + 2.0).abs() < 1e-2, "sum of mu = {total}");
}

#[test]
fn train_step_reports_pre_update_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let traj = trajectory(&mut rng, 4, 1.0);
    let mut m = model(Family::SkewNormal, 8, 8);
    let probe = m.clone();
    let stats = m.train_step(&[&traj], 1e-2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let before = trajectory_loss(&probe, &traj, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(stats.loss, before.loss);
    assert_ne!(m.net().params(), probe.net().params());
}

#[test]
fn shared_noise_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut m = model(Family::Gaussian, 8, 11).with_shared_noise(true);
    let traj = trajectory(&mut rng, 5, 0.7);
    let noise = NoiseTable::draw(5, true, &mut rng);
    let analytic = trajectory_loss_with_noise(&m, &traj, &noise)
        .unwrap()
        .param_grads(&m)
        .unwrap();
    let h = 1e-6;
    for (p, &an) in analytic.iter().enumerate() {
        let x = m.net().params()[p];
        m.net_mut().params_mut()[p] = x + h;
        let up = trajectory_loss_with_noise(&m, &traj, &noise).unwrap().loss;
        m.net_mut().params_mut()[p] = x - h;
        let down = trajectory_loss_with_noise(&m, &traj, &noise).unwrap().loss;
        m.net_mut().params_mut()[p] = x;
        let fd = (up - down) / (2.0 * h);
        assert!((fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()).max(1e-3), "param {p}: {an} vs {fd}");
    }
}

#[test]
fn sigma_clamp_stops_the_sigma_gradient() {
    // raw log-sigma bias far below the clamp: sigma is pinned at the floor
    let sizes = [5, 2];
    let mut params = vec![0.0; 5 * 2 + 2];
    params[11] = -30.0;
    let net = DenseNet::from_params(&sizes, params).unwrap();
    let m = RewardModel::from_net(Family::Gaussian, net, SigmaBounds::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let traj = trajectory(&mut rng, 3, 0.0);
    let tl = trajectory_loss(&m, &traj, &mut rng).unwrap();
    assert_eq!(tl.mean_sigma, 1e-4);
    for t in 0..3 {
        assert_eq!(tl.head_grads.get(t, 1), 0.0);
    }
}

proptest! {
    #[test]
    fn skew_at_lambda_zero_is_gaussian(delta in -50.0f64..50.0, log_sigma in -4.0f64..4.0) {
        let sigma = log_sigma.exp();
        let g = gaussian_nll(delta, &RewardDistributionParams { mu: 0.0, sigma, lambda: None });
        let s = skew_normal_nll(delta, &RewardDistributionParams { mu: 0.0, sigma, lambda: Some(0.0) });
        prop_assert!((g - s).abs() <= 1e-12);
    }

    #[test]
    fn loo_return_recovers_true_rewards(rewards in prop::collection::vec(-10.0f64..10.0, 1..30), pick in 0usize..30) {
        let i = pick % rewards.len();
        let total: f64 = rewards.iter().sum();
        let r = loo_return(total, &rewards, i).unwrap();
        prop_assert!((r - rewards[i]).abs() <= 1e-9);
    }

    #[test]
    fn skew_optimum_shrinks_with_positive_shape(delta in 0.01f64..20.0, lambda in -5.0f64..5.0) {
        prop_assume!(lambda.abs() > 1e-6);
        let s = optimal_sigma_skew(delta, lambda, 1e-13 * delta).unwrap();
        prop_assert!(s > 0.0);
        prop_assert_eq!(s < delta, lambda > 0.0);
    }

    #[test]
    fn fixed_sigma_loss_is_half_the_regression_loss(seed in 0u64..1000, len in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = model(Family::FixedSigmaMse, 8, seed);
        let ret = rng.random_range(-20.0..20.0);
        let traj = trajectory(&mut rng, len, ret);
        let tl = trajectory_loss(&m, &traj, &mut rng).unwrap();
        let mse = mse_rd_loss(&m, &traj).unwrap();
        prop_assert!((2.0 * tl.loss - mse).abs() <= 1e-12 * mse.max(1e-300));
    }
}
