//! Train a small predictor, then the importance estimator on top of it, and
//! compare full and pruned inference on held-out scenes.
//!
//! ```bash
//! RUST_LOG=info cargo run --release --example train_and_prune
//! ```

use socialprune::estimator::EstimatorConfig;
use socialprune::experiments::{evaluate, train_estimator, train_predictor, Optimizer, Phase, TrainConfig};
use socialprune::predictor::PredictorConfig;
use socialprune::scene::{generate_synthetic, GenConfig};
use socialprune::selection::GumbelConfig;
use socialprune::Result;

fn main() -> Result<()> {
    env_logger::init();
    let train = generate_synthetic(
        &GenConfig {
            n_scenes: 150,
            n_max: 20,
            ..Default::default()
        },
        1,
    )?;
    let test = generate_synthetic(
        &GenConfig {
            n_scenes: 40,
            n_min: 8,
            n_max: 20,
            id_prefix: "test-".into(),
            ..Default::default()
        },
        2,
    )?;

    let pc = PredictorConfig {
        d_model: 32,
        d_ff: 64,
        ..Default::default()
    };
    let tp_cfg = TrainConfig {
        optimizer: Optimizer::Adam,
        epochs: 8,
        learning_rate: 2e-3,
        ..Default::default()
    };
    let (predictor, log) = train_predictor(&train, &tp_cfg, &pc, 10)?;
    println!(
        "predictor loss: first epoch {:.3}, last {:.3}",
        log[0].loss,
        log[log.len() - 1].loss
    );

    let ec = EstimatorConfig {
        d_in: 32,
        d_embed: 32,
        d_ff: 32,
        ..Default::default()
    };
    let ie_cfg = TrainConfig {
        phase: Phase::Ie,
        epochs: 10,
        learning_rate: 0.05,
        ..Default::default()
    };
    let (estimator, log) = train_estimator(&train, &ie_cfg, &predictor, &ec, 11)?;
    let last = log.epochs.last().expect("at least one epoch");
    println!(
        "estimator: score mean {:.3}, std {:.3}",
        last.score_mean, last.score_std
    );

    let report = evaluate(&test, &predictor, &estimator, &GumbelConfig::default())?;
    println!(
        "TP      ADE {:.3}  FDE {:.3}",
        report.baseline_aggregate.ade, report.baseline_aggregate.fde
    );
    println!(
        "TP + IE ADE {:.3}  FDE {:.3}  keeping {:.0}% of neighbours, {:.0}% of the FLOPs",
        report.pruned_aggregate.ade,
        report.pruned_aggregate.fde,
        100.0 * report.mean_keep_rate,
        100.0 * report.mean_flops_ratio
    );
    Ok(())
}
