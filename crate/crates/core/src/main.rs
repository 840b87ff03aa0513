use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lrr::config::{DiagnoseConfig, ExperimentConfig};
use lrr::diagnostics::autocorr_report;
use lrr::experiment::{run_experiment, PolicyCheckpoint};
use lrr::verify::verify_all;

#[derive(Parser)]
#[command(name = "lrr", version, about = "Likelihood reward redistribution with Soft Actor-Critic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured seed and write CSV artifacts.
    Train {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Evaluate a saved policy with deterministic actions.
    Eval {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Lag-1 reward autocorrelation per environment under a random policy, as CSV.
    DiagnoseAutocorr { config: PathBuf },
    /// Run the analytical verification suite.
    Verify,
}

fn run(cli: Cli) -> lrr::Result<bool> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Train { config, output_dir } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let records = run_experiment(&cfg)?;
            writeln!(out, "config {}  mode {}", cfg.hash(), cfg.reward_mode.name())?;
            for r in &records {
                let last = r.final_return().map_or("n/a".to_string(), |v| format!("{v:.3}"));
                writeln!(
                    out,
                    "seed {:>4}  episodes {:>6}  final return {:>10}  {:.1}s",
                    r.seed,
                    r.episodes,
                    last,
                    r.wall_clock.as_secs_f64()
                )?;
            }
            writeln!(out, "artifacts in {}", cfg.output_dir.display())?;
            Ok(true)
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
        } => {
            if episodes == 0 {
                return Err(lrr::Error::Config {
                    key: "episodes".into(),
                    message: "must be at least 1".into(),
                });
            }
            let (mean, std) = PolicyCheckpoint::read(&checkpoint)?.evaluate(episodes, seed)?;
            writeln!(out, "episodes,mean_return,std_return")?;
            writeln!(out, "{episodes},{mean},{std}")?;
            Ok(true)
        }
        Command::DiagnoseAutocorr { config } => {
            let text = std::fs::read_to_string(&config)?;
            let cfg = DiagnoseConfig::parse(&text)?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["name", "rho1", "ci_low", "ci_high", "n"])?;
            for env in &cfg.environments {
                let r = autocorr_report(env, cfg.horizon, cfg.episodes, cfg.seed)?;
                w.write_record([
                    r.environment,
                    r.rho1.to_string(),
                    r.ci_low.to_string(),
                    r.ci_high.to_string(),
                    r.n.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(true)
        }
        Command::Verify => {
            let results = verify_all();
            for r in &results {
                writeln!(out, "{r}")?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            writeln!(out, "{} checks, {} failed", results.len(), failed)?;
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
