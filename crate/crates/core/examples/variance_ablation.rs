//! Estimator training with and without the variance loss on the same data
//! and seed.
//!
//! ```bash
//! cargo run --release --example variance_ablation
//! ```

use socialprune::estimator::EstimatorConfig;
use socialprune::experiments::{ablate_vl, train_predictor, ExperimentConfig, Optimizer, TrainConfig};
use socialprune::predictor::PredictorConfig;
use socialprune::scene::{generate_synthetic, GenConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.predictor = PredictorConfig {
        d_model: 32,
        d_ff: 64,
        ..Default::default()
    };
    cfg.estimator = EstimatorConfig {
        d_in: 32,
        d_embed: 32,
        d_ff: 32,
        init_score_bias: 2.0,
        ..Default::default()
    };
    cfg.train_ie.epochs = 10;
    cfg.train_ie.learning_rate = 0.05;

    let train = generate_synthetic(
        &GenConfig {
            n_scenes: 120,
            n_max: 16,
            ..Default::default()
        },
        8,
    )?;
    let test = generate_synthetic(
        &GenConfig {
            n_scenes: 30,
            n_min: 8,
            n_max: 16,
            id_prefix: "test-".into(),
            ..Default::default()
        },
        9,
    )?;
    let tp_cfg = TrainConfig {
        optimizer: Optimizer::Adam,
        epochs: 6,
        learning_rate: 2e-3,
        ..Default::default()
    };
    let (predictor, _) = train_predictor(&train, &tp_cfg, &cfg.predictor_config(), 3)?;
    let ablation = ablate_vl(&train, &test, &predictor, &cfg, &[1.0, 0.0])?;
    println!("baseline ADE {:.3}", ablation.baseline_ade);
    for (arm, _) in &ablation.arms {
        println!(
            "alpha {:.0}: score std {:.3}, keep-rate {:.2}, pruned ADE {:.3}, FLOPs ratio {:.2}",
            arm.alpha, arm.score_std, arm.keep_rate, arm.pruned_ade, arm.flops_ratio
        );
    }
    Ok(())
}
