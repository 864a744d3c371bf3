use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use socialprune::experiments::{self, ExperimentConfig, Overrides};
use socialprune::Error;

#[derive(Parser)]
#[command(
    name = "socialprune",
    version,
    about = "Trajectory prediction with learned neighbour pruning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic training and test scene files
    GenData(Common),
    /// Train the trajectory predictor
    TrainTp(Common),
    /// Train the importance estimator against the frozen predictor
    TrainIe(Common),
    /// Compare the full predictor with the pruned pipeline on test scenes
    Eval(Common),
    /// FLOPs ratio against the full predictor for each scene size
    FlopsSweep(Common),
    /// Leave-one-out oracle over single-neighbour removals
    Oracle(Common),
    /// Train the estimator with and without the variance loss
    AblateVl(Common),
    /// Write per-neighbour importance scores for the test scenes
    DumpScores(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Inference keep threshold on importance scores
    #[arg(long)]
    threshold: Option<f64>,
    /// Weight of the variance loss
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> socialprune::Result<Vec<PathBuf>> {
    let (run, common): (fn(&ExperimentConfig) -> socialprune::Result<Vec<PathBuf>>, Common) =
        match cli.command {
            Command::GenData(c) => (experiments::cmd_gen_data, c),
            Command::TrainTp(c) => (experiments::cmd_train_tp, c),
            Command::TrainIe(c) => (experiments::cmd_train_ie, c),
            Command::Eval(c) => (experiments::cmd_eval, c),
            Command::FlopsSweep(c) => (experiments::cmd_flops_sweep, c),
            Command::Oracle(c) => (experiments::cmd_oracle, c),
            Command::AblateVl(c) => (experiments::cmd_ablate_vl, c),
            Command::DumpScores(c) => (experiments::cmd_dump_scores, c),
        };
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        threshold: common.threshold,
        alpha: common.alpha,
        out: common.out,
    })?;
    run(&cfg)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!(
                "error: usage: {}",
                one_line(msg.lines().next().unwrap_or("")).trim_start_matches("error: ")
            );
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(match e {
                Error::Config(_) | Error::Parse { .. } => 2,
                _ => 1,
            })
        }
    }
}
