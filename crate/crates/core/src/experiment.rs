//! Training loop: collect an episode, fit the reward model, relabel, and run
//! SAC updates every environment step.
//!
//! Per episode the reward model gets `reward_updates_per_episode` Adam steps
//! on minibatches of `reward_batch_size` stored trajectories, then the
//! episode's transitions enter the replay buffer with rewards from the
//! configured source. Episodes cut off by the end of the run are dropped.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, RelabelMode, RewardMode};
use crate::env::{make_env, EnvSpec, Environment, EpisodicWrapper};
use crate::error::{Error, Result};
use crate::nn::DenseNet;
use crate::reward_model::{RewardModel, TrainStats, TrajectoryBuffer};
use crate::sac::{relabel_and_store, EpisodeRecord, ReplayBuffer, RewardSource, SacAgent};
use crate::seeding::{stream_rng, Stream};

/// Number of trailing evaluations averaged into the final return.
pub const FINAL_EVAL_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub step: usize,
    pub mean_return: f64,
    pub std_return: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub evaluations: Vec<EvalPoint>,
    pub reward_losses: Vec<TrainStats>,
    pub episodes: usize,
    pub wall_clock: Duration,
}

impl RunRecord {
    /// Mean of the last `FINAL_EVAL_WINDOW` evaluation returns.
    pub fn final_return(&self) -> Option<f64> {
        let n = self.evaluations.len().min(FINAL_EVAL_WINDOW);
        if n == 0 {
            return None;
        }
        let tail = &self.evaluations[self.evaluations.len() - n..];
        Some(tail.iter().map(|e| e.mean_return).sum::<f64>() / n as f64)
    }
}

/// Artifact paths for one seed.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub eval_csv: PathBuf,
    pub reward_loss_csv: PathBuf,
    pub trajectories_csv: PathBuf,
    pub policy_checkpoint: PathBuf,
    pub reward_checkpoint: PathBuf,
}

impl RunPaths {
    pub fn new(dir: &Path, seed: u64) -> Self {
        Self {
            eval_csv: dir.join(format!("eval_seed{seed}.csv")),
            reward_loss_csv: dir.join(format!("reward_loss_seed{seed}.csv")),
            trajectories_csv: dir.join(format!("trajectories_seed{seed}.csv")),
            policy_checkpoint: dir.join(format!("policy_seed{seed}.ckpt")),
            reward_checkpoint: dir.join(format!("reward_model_seed{seed}.ckpt")),
        }
    }
}

/// Runs every configured seed in sequence, writing artifacts under
/// `output_dir`, plus `config.yaml` and `run_summary.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.yaml"), cfg.to_yaml())?;
    let mut records = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let rec = run_seed(cfg, seed, &cfg.output_dir)
            .map_err(|e| e.with_context(format!("run with seed {seed} ({})", cfg.reward_mode.name())))?;
        records.push(rec);
    }
    let mut w = csv::Writer::from_path(cfg.output_dir.join("run_summary.csv"))?;
    w.write_record(["seed", "config_hash", "reward_mode", "episodes", "final_return", "wall_clock_seconds"])?;
    for r in &records {
        w.write_record([
            r.seed.to_string(),
            r.config_hash.clone(),
            cfg.reward_mode.name().to_string(),
            r.episodes.to_string(),
            r.final_return().map_or(String::new(), |v| v.to_string()),
            format!("{:.3}", r.wall_clock.as_secs_f64()),
        ])?;
    }
    w.flush()?;
    Ok(records)
}

struct TrajectoryDump {
    writer: csv::Writer<File>,
}

impl TrajectoryDump {
    fn create(path: &Path, spec: &EnvSpec) -> Result<Self> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["episode".to_string(), "t".to_string()];
        header.extend((0..spec.state_dim).map(|k| format!("s{k}")));
        header.extend((0..spec.action_dim).map(|k| format!("a{k}")));
        header.extend(["inner_reward", "emitted_reward", "stored_reward"].map(String::from));
        writer.write_record(&header)?;
        Ok(Self { writer })
    }

    fn write(&mut self, episode: usize, ep: &EpisodeRecord, stored: &[f64]) -> Result<()> {
        for t in 0..ep.len() {
            let mut row = vec![episode.to_string(), t.to_string()];
            row.extend(ep.states[t].iter().map(|v| v.to_string()));
            row.extend(ep.actions[t].iter().map(|v| v.to_string()));
            row.push(ep.inner_rewards[t].to_string());
            row.push(ep.emitted_rewards[t].to_string());
            row.push(stored[t].to_string());
            self.writer.write_record(&row)?;
        }
        Ok(())
    }
}

/// Mean and population standard deviation of `episodes` deterministic
/// episodes, scored by the sum of dense rewards.
pub fn evaluate_policy(
    agent: &SacAgent,
    env: &mut dyn Environment,
    episodes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)> {
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset(rng.random());
        let mut total = 0.0;
        loop {
            let action = agent.select_action(&state, true, rng)?;
            let r = env.step(&action)?;
            total += r.reward;
            state = r.next_state;
            if r.terminated || r.truncated {
                break;
            }
        }
        returns.push(total);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// One seed of one configuration.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<RunRecord> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;
    let paths = RunPaths::new(out_dir, seed);

    let mut env_rng = stream_rng(seed, Stream::Env);
    let mut eval_rng = stream_rng(seed, Stream::Eval);
    let mut reward_rng = stream_rng(seed, Stream::RewardModel);
    let mut sac_rng = stream_rng(seed, Stream::Sac);
    let mut buffer_rng = stream_rng(seed, Stream::Buffer);

    let mut env = EpisodicWrapper::new(make_env(&cfg.environment, cfg.horizon)?);
    let mut eval_env = make_env(&cfg.environment, cfg.horizon)?;
    let spec = env.spec().clone();

    let mut agent = SacAgent::new(
        spec.state_dim,
        &spec.action_low,
        &spec.action_high,
        cfg.sac_config(),
        &mut sac_rng,
    )?;
    let mut model = match cfg.reward_mode.family() {
        Some(family) => {
            let mut sizes = vec![spec.state_dim + spec.action_dim];
            sizes.extend(cfg.reward_hidden());
            sizes.push(family.head_width());
            let net = DenseNet::new(&sizes, &mut reward_rng)?;
            Some(RewardModel::from_net(family, net, cfg.sigma_bounds())?.with_shared_noise(cfg.shared_noise))
        }
        None => None,
    };
    let mut trajectories = TrajectoryBuffer::new(cfg.reward_buffer_capacity);
    let mut replay = ReplayBuffer::new(cfg.replay_capacity);
    let mut dump = if cfg.dump_trajectories {
        Some(TrajectoryDump::create(&paths.trajectories_csv, &spec)?)
    } else {
        None
    };

    let mut evaluations = Vec::new();
    let mut reward_losses = Vec::new();
    let mut episodes = 0;
    let mut episode = EpisodeRecord::default();
    let mut state = env.reset(env_rng.random());

    for step in 1..=cfg.total_steps {
        let action = if step <= cfg.start_steps {
            (0..spec.action_dim).map(|_| sac_rng.random_range(-1.0..1.0)).collect()
        } else {
            agent.select_normalized(&state, false, &mut sac_rng)?
        };
        let r = env
            .step(&agent.scale_action(&action))
            .map_err(|e| e.with_context(format!("environment step {step}")))?;
        episode.states.push(std::mem::replace(&mut state, r.next_state.clone()));
        episode.actions.push(action);
        episode.next_states.push(r.next_state.clone());
        episode.inner_rewards.push(r.inner_reward);
        episode.emitted_rewards.push(r.reward);

        if r.done() {
            episode.terminated = r.terminated;
            let ep = std::mem::take(&mut episode);
            let source = match (&mut model, cfg.reward_mode) {
                (Some(m), _) => {
                    trajectories.push(ep.to_trajectory()?);
                    for _ in 0..cfg.reward_updates_per_episode {
                        let batch = trajectories.sample(cfg.reward_batch_size, &mut buffer_rng);
                        let stats = m
                            .train_step(&batch, cfg.learning_rate, &mut reward_rng)
                            .map_err(|e| e.with_context(format!("reward-model update after episode {episodes}")))?;
                        reward_losses.push(stats);
                    }
                    RewardSource::Model(&*m)
                }
                (None, RewardMode::OracleDense) => RewardSource::Oracle,
                (None, _) => RewardSource::Sparse,
            };
            let stored = relabel_and_store(&mut replay, &ep, source)?;
            if let Some(d) = dump.as_mut() {
                d.write(episodes, &ep, &stored)?;
            }
            episodes += 1;
            state = env.reset(env_rng.random());
        }

        if replay.len() >= cfg.sac_batch_size {
            for _ in 0..cfg.gradient_steps_per_env_step {
                let mut batch = replay.sample(cfg.sac_batch_size, &mut buffer_rng)?;
                if let (RelabelMode::OnSample, Some(m)) = (cfg.relabel, &model) {
                    batch.rewards = m.mean_rewards(&batch.states.hstack(&batch.actions)?)?;
                }
                agent
                    .sac_update(&batch, &mut sac_rng)
                    .map_err(|e| e.with_context(format!("SAC update at step {step}")))?;
            }
        }

        if step % cfg.eval_interval == 0 {
            let (mean_return, std_return) =
                evaluate_policy(&agent, eval_env.as_mut(), cfg.eval_episodes, &mut eval_rng)?;
            evaluations.push(EvalPoint {
                step,
                mean_return,
                std_return,
            });
        }
    }

    write_eval_csv(&paths.eval_csv, seed, &evaluations)?;
    if model.is_some() {
        write_loss_csv(&paths.reward_loss_csv, &reward_losses)?;
    }
    if let Some(mut d) = dump {
        d.writer.flush()?;
    }
    write_policy_checkpoint(&paths.policy_checkpoint, &cfg.environment, cfg.horizon, agent.actor())?;
    if let Some(m) = &model {
        let mut w = BufWriter::new(File::create(&paths.reward_checkpoint)?);
        m.write_checkpoint(&mut w)?;
        w.flush()?;
    }

    Ok(RunRecord {
        config_hash: cfg.hash(),
        seed,
        evaluations,
        reward_losses,
        episodes,
        wall_clock: started.elapsed(),
    })
}

fn write_eval_csv(path: &Path, seed: u64, rows: &[EvalPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "mean_return", "std_return", "seed"])?;
    for e in rows {
        w.write_record([
            e.step.to_string(),
            e.mean_return.to_string(),
            e.std_return.to_string(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_loss_csv(path: &Path, rows: &[TrainStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["update_index", "loss", "mean_sigma", "mean_abs_residual"])?;
    for (k, s) in rows.iter().enumerate() {
        w.write_record([
            k.to_string(),
            s.loss.to_string(),
            s.mean_sigma.to_string(),
            s.mean_abs_residual.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Policy checkpoint: environment, horizon, then the actor network.
///
/// ```text
/// sac-policy v1
/// environment <name>
/// horizon <steps>
/// <dense-net record>
/// ```
pub fn write_policy_checkpoint(path: &Path, environment: &str, horizon: usize, actor: &DenseNet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "sac-policy v1")?;
    writeln!(w, "environment {environment}")?;
    writeln!(w, "horizon {horizon}")?;
    actor.write_checkpoint(&mut w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct PolicyCheckpoint {
    pub environment: String,
    pub horizon: usize,
    pub actor: DenseNet,
}

impl PolicyCheckpoint {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut field = |prefix: &str| -> Result<String> {
            let mut line = String::new();
            r.read_line(&mut line)?;
            line.trim()
                .strip_prefix(prefix)
                .map(|s| s.trim().to_string())
                .ok_or_else(|| Error::Checkpoint(format!("expected `{prefix}` line, got `{}`", line.trim())))
        };
        field("sac-policy v1")?;
        let environment = field("environment")?;
        let horizon = field("horizon")?
            .parse()
            .map_err(|e| Error::Checkpoint(format!("bad horizon: {e}")))?;
        let actor = DenseNet::read_checkpoint(&mut r)?;
        Ok(Self {
            environment,
            horizon,
            actor,
        })
    }

    /// Rebuilds an agent around the stored actor; critics are throwaway.
    pub fn agent(&self) -> Result<SacAgent> {
        let env = make_env(&self.environment, self.horizon)?;
        let spec = env.spec();
        let sizes = self.actor.layer_sizes();
        if sizes.first() != Some(&spec.state_dim) || sizes.last() != Some(&(2 * spec.action_dim)) {
            return Err(Error::Checkpoint(format!(
                "actor layers {sizes:?} do not fit environment {}",
                self.environment
            )));
        }
        let cfg = crate::sac::SacConfig {
            hidden: sizes[1..sizes.len() - 1].to_vec(),
            ..Default::default()
        };
        let mut agent = SacAgent::new(
            spec.state_dim,
            &spec.action_low,
            &spec.action_high,
            cfg,
            &mut ChaCha8Rng::seed_from_u64(0),
        )?;
        agent.set_actor(self.actor.clone())?;
        Ok(agent)
    }

    /// Deterministic evaluation on fresh environment instances.
    pub fn evaluate(&self, episodes: usize, seed: u64) -> Result<(f64, f64)> {
        let agent = self.agent()?;
        let mut env = make_env(&self.environment, self.horizon)?;
        evaluate_policy(&agent, env.as_mut(), episodes, &mut stream_rng(seed, Stream::Eval))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(mode: RewardMode, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            reward_mode: mode,
            hidden_units: 16,
            reward_hidden_units: 16,
            sac_batch_size: 32,
            replay_capacity: 10_000,
            horizon: 20,
            total_steps: 300,
            start_steps: 100,
            eval_interval: 100,
            eval_episodes: 2,
            seeds: vec![5],
            output_dir: dir.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zero_steps_gives_empty_log() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            total_steps: 0,
            ..tiny(RewardMode::LrrGaussian, dir.path())
        };
        let recs = run_experiment(&cfg).unwrap();
        assert!(recs[0].evaluations.is_empty());
        let text = fs::read_to_string(dir.path().join("eval_seed5.csv")).unwrap();
        assert_eq!(text.trim(), "step,mean_return,std_return,seed");
    }

    #[test]
    fn short_run_logs_every_interval_and_round_trips_policy() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(RewardMode::LrrSkew, dir.path());
        let rec = &run_experiment(&cfg).unwrap()[0];
        assert_eq!(rec.evaluations.iter().map(|e| e.step).collect::<Vec<_>>(), vec![100, 200, 300]);
        assert_eq!(rec.episodes, 15);
        assert_eq!(rec.reward_losses.len(), 15 * cfg.reward_updates_per_episode);
        let ckpt = PolicyCheckpoint::read(&dir.path().join("policy_seed5.ckpt")).unwrap();
        assert_eq!(ckpt.environment, "point_mass");
        let (mean, _) = ckpt.evaluate(2, 5).unwrap();
        assert!(mean.is_finite());
    }
}
