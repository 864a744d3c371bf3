//! Training, evaluation and analysis pipelines behind the command-line
//! interface. Every command reads an [`ExperimentConfig`] and writes its
//! artifacts into the configured output directory.

mod config;
mod eval;
mod train;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{
    derive_seed, DataSource, ExperimentConfig, Optimizer, Overrides, Phase, SweepConfig, TrainConfig,
};
pub use eval::{
    buckets_csv, constant_velocity, dump_scores, evaluate, flops_sweep, histogram_csv, keep_rates_by_people,
    metrics_csv, oracle_csv, oracle_eval, oracle_summary_csv, summary_csv, sweep_csv, Aggregate, BucketRatio,
    ExperimentReport, MetricRow, OracleReport, OracleRow, SweepRow, SweepTable,
};
pub use train::{score_stats, train_estimator, train_predictor, IeEpoch, IeLog, ScoreStats, TpEpoch};

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::params::Checkpoint;
use crate::predictor::Predictor;
use crate::scene::{generate_synthetic, load_scenes, save_scenes, Scene};

pub const TRAIN_FILE: &str = "train.jsonl";
pub const TEST_FILE: &str = "test.jsonl";
pub const TP_CHECKPOINT: &str = "tp.ckpt";
pub const IE_CHECKPOINT: &str = "ie.ckpt";

fn write(out: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join(name);
    fs::write(&path, contents)?;
    written.push(path);
    Ok(())
}

fn scenes_for(cfg: &ExperimentConfig, test: bool) -> Result<Vec<Scene>> {
    let src = if test { &cfg.test_data } else { &cfg.train_data };
    if let Some(path) = &src.path {
        let report = load_scenes(path, &cfg.window)?;
        if report.dropped_tracks > 0 || report.dropped_scenes > 0 {
            log::warn!(
                "{}: dropped {} tracks and {} scenes",
                path.display(),
                report.dropped_tracks,
                report.dropped_scenes
            );
        }
        return Ok(report.scenes);
    }
    let cached = cfg.out.join(if test { TEST_FILE } else { TRAIN_FILE });
    if cached.exists() {
        return Ok(load_scenes(&cached, &cfg.window)?.scenes);
    }
    generate_synthetic(&cfg.generator(test), cfg.data_seed(test))
}

fn load_predictor(cfg: &ExperimentConfig) -> Result<Predictor> {
    let path = cfg.out.join(TP_CHECKPOINT);
    if !path.exists() {
        return Err(Error::Checkpoint(format!(
            "{} not found; run train-tp first",
            path.display()
        )));
    }
    Predictor::from_checkpoint(Checkpoint::load(&path)?)
}

fn load_estimator(cfg: &ExperimentConfig) -> Result<Estimator> {
    let path = cfg.out.join(IE_CHECKPOINT);
    if !path.exists() {
        return Err(Error::Checkpoint(format!(
            "{} not found; run train-ie first",
            path.display()
        )));
    }
    Estimator::from_checkpoint(Checkpoint::load(&path)?)
}

fn prepare_out(cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    Ok(())
}

/// Writes the training and test scene files.
pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let mut written = Vec::new();
    for (test, name) in [(false, TRAIN_FILE), (true, TEST_FILE)] {
        let scenes = generate_synthetic(&cfg.generator(test), cfg.data_seed(test))?;
        let path = cfg.out.join(name);
        save_scenes(&path, &scenes)?;
        written.push(path);
    }
    Ok(written)
}

pub fn cmd_train_tp(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let scenes = scenes_for(cfg, false)?;
    let (model, log) = train_predictor(
        &scenes,
        &cfg.train_config(Phase::Tp),
        &cfg.predictor_config(),
        cfg.init_seed(Phase::Tp),
    )?;
    let mut written = Vec::new();
    let path = cfg.out.join(TP_CHECKPOINT);
    model.to_checkpoint().save(&path)?;
    written.push(path);
    let mut csv = String::from("epoch,loss,grad_norm\n");
    for e in &log {
        let _ = writeln!(csv, "{},{:.6},{:.6}", e.epoch, e.loss, e.grad_norm);
    }
    write(&cfg.out, "tp_log.csv", &csv, &mut written)?;
    Ok(written)
}

fn ie_log_csv(log: &IeLog) -> String {
    let mut csv = String::from(
        "epoch,temperature,trajectory_loss,variance_loss,total_loss,score_mean,score_std,keep_rate\n",
    );
    for e in &log.epochs {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            e.epoch,
            e.temperature,
            e.trajectory_loss,
            e.variance_loss,
            e.total_loss,
            e.score_mean,
            e.score_std,
            e.keep_rate
        );
    }
    csv
}

pub fn cmd_train_ie(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let predictor = load_predictor(cfg)?;
    let scenes = scenes_for(cfg, false)?;
    let (model, log) = train_estimator(
        &scenes,
        &cfg.train_config(Phase::Ie),
        &predictor,
        &cfg.estimator,
        cfg.init_seed(Phase::Ie),
    )?;
    let mut written = Vec::new();
    let path = cfg.out.join(IE_CHECKPOINT);
    model.to_checkpoint().save(&path)?;
    written.push(path);
    write(&cfg.out, "ie_log.csv", &ie_log_csv(&log), &mut written)?;
    Ok(written)
}

pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let predictor = load_predictor(cfg)?;
    let estimator = load_estimator(cfg)?;
    let report = evaluate(&scenes_for(cfg, true)?, &predictor, &estimator, &cfg.selection)?;
    let mut written = Vec::new();
    write(
        &cfg.out,
        "baseline.csv",
        &metrics_csv(&report.baseline),
        &mut written,
    )?;
    write(&cfg.out, "pruned.csv", &metrics_csv(&report.pruned), &mut written)?;
    write(&cfg.out, "summary.csv", &summary_csv(&report), &mut written)?;
    write(&cfg.out, "by_people.csv", &buckets_csv(&report), &mut written)?;
    write(
        &cfg.out,
        "score_histogram.csv",
        &histogram_csv(&report),
        &mut written,
    )?;
    Ok(written)
}

/// FLOPs ratios over the configured people range, using keep-rates
/// measured on the test set when both checkpoints exist.
pub fn cmd_flops_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let range = cfg.sweep.n_min..=cfg.sweep.n_max;
    let pcfg = cfg.predictor_config();
    let table = if cfg.out.join(TP_CHECKPOINT).exists() && cfg.out.join(IE_CHECKPOINT).exists() {
        let predictor = load_predictor(cfg)?;
        let estimator = load_estimator(cfg)?;
        let report = evaluate(&scenes_for(cfg, true)?, &predictor, &estimator, &cfg.selection)?;
        flops_sweep(&pcfg, &estimator.config, range, keep_rates_by_people(&report))?
    } else {
        log::warn!(
            "no trained checkpoints in {}; sweeping with keep-rate 1",
            cfg.out.display()
        );
        flops_sweep(&pcfg, &cfg.estimator, range, |_| 1.0)?
    };
    let mut written = Vec::new();
    write(&cfg.out, "flops_sweep.csv", &sweep_csv(&table), &mut written)?;
    let crossover = table
        .crossover
        .map(|n| n.to_string())
        .unwrap_or_else(|| "none".into());
    write(
        &cfg.out,
        "flops_crossover.txt",
        &format!("{crossover}\n"),
        &mut written,
    )?;
    Ok(written)
}

pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let predictor = load_predictor(cfg)?;
    let report = oracle_eval(&scenes_for(cfg, true)?, &predictor)?;
    let mut written = Vec::new();
    write(&cfg.out, "oracle.csv", &oracle_csv(&report), &mut written)?;
    write(
        &cfg.out,
        "oracle_summary.csv",
        &oracle_summary_csv(&report),
        &mut written,
    )?;
    Ok(written)
}

/// Outcome of one estimator training run in the variance-loss ablation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationArm {
    pub alpha: f64,
    pub first_batch_trajectory_loss: f64,
    pub score_mean: f64,
    pub score_std: f64,
    pub keep_rate: f64,
    pub pruned_ade: f64,
    pub pruned_fde: f64,
    pub flops_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct Ablation {
    pub baseline_ade: f64,
    pub baseline_fde: f64,
    pub arms: Vec<(AblationArm, Estimator)>,
}

/// Trains the estimator once per `alpha` with identical seeds and scores the
/// held-out scenes.
pub fn ablate_vl(
    train: &[Scene],
    test: &[Scene],
    predictor: &Predictor,
    cfg: &ExperimentConfig,
    alphas: &[f64],
) -> Result<Ablation> {
    let mut arms = Vec::with_capacity(alphas.len());
    let mut baseline = (0.0, 0.0);
    for &alpha in alphas {
        let tcfg = TrainConfig {
            alpha,
            ..cfg.train_config(Phase::Ie)
        };
        let (model, log) =
            train_estimator(train, &tcfg, predictor, &cfg.estimator, cfg.init_seed(Phase::Ie))?;
        let report = evaluate(test, predictor, &model, &cfg.selection)?;
        let scores: Vec<Vec<f64>> = test
            .iter()
            .map(|s| {
                let (norm, _) = crate::scene::normalize_scene(s, predictor.config.t_obs);
                model.scores(&predictor.features(&norm)?)
            })
            .collect::<Result<_>>()?;
        let stats = score_stats(&scores, cfg.selection.threshold);
        baseline = (report.baseline_aggregate.ade, report.baseline_aggregate.fde);
        arms.push((
            AblationArm {
                alpha,
                first_batch_trajectory_loss: log.first_batch_trajectory_loss,
                score_mean: stats.mean,
                score_std: stats.std,
                keep_rate: report.mean_keep_rate,
                pruned_ade: report.pruned_aggregate.ade,
                pruned_fde: report.pruned_aggregate.fde,
                flops_ratio: report.mean_flops_ratio,
            },
            model,
        ));
    }
    Ok(Ablation {
        baseline_ade: baseline.0,
        baseline_fde: baseline.1,
        arms,
    })
}

pub fn ablation_csv(a: &Ablation) -> String {
    let mut s = String::from(
        "alpha,first_batch_trajectory_loss,score_mean,score_std,keep_rate,ade,fde,baseline_ade,baseline_fde,flops_ratio\n",
    );
    for (arm, _) in &a.arms {
        let _ = writeln!(
            s,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            arm.alpha,
            arm.first_batch_trajectory_loss,
            arm.score_mean,
            arm.score_std,
            arm.keep_rate,
            arm.pruned_ade,
            arm.pruned_fde,
            a.baseline_ade,
            a.baseline_fde,
            arm.flops_ratio
        );
    }
    s
}

/// Variance-loss ablation: the configured `alpha` against `alpha = 0`.
pub fn cmd_ablate_vl(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let predictor = load_predictor(cfg)?;
    let train = scenes_for(cfg, false)?;
    let test = scenes_for(cfg, true)?;
    let alpha = if cfg.train_ie.alpha > 0.0 {
        cfg.train_ie.alpha
    } else {
        1.0
    };
    let ablation = ablate_vl(&train, &test, &predictor, cfg, &[alpha, 0.0])?;
    let mut written = Vec::new();
    for (arm, model) in &ablation.arms {
        let path = cfg.out.join(format!("ie_alpha{}.ckpt", arm.alpha));
        model.to_checkpoint().save(&path)?;
        written.push(path);
    }
    write(&cfg.out, "ablation.csv", &ablation_csv(&ablation), &mut written)?;
    Ok(written)
}

pub fn cmd_dump_scores(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    prepare_out(cfg)?;
    let predictor = load_predictor(cfg)?;
    let estimator = load_estimator(cfg)?;
    let text = dump_scores(&scenes_for(cfg, true)?, &predictor, &estimator)?;
    let mut written = Vec::new();
    write(&cfg.out, "scores.txt", &text, &mut written)?;
    Ok(written)
}
