//! Leave-one-out oracle: how much better could the predictor do if the
//! single most harmful neighbour were removed from every scene?
//!
//! ```bash
//! cargo run --release --example oracle_study
//! ```

use socialprune::experiments::{oracle_eval, train_predictor, Optimizer, TrainConfig};
use socialprune::predictor::PredictorConfig;
use socialprune::scene::{generate_synthetic, GenConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let train = generate_synthetic(
        &GenConfig {
            n_scenes: 100,
            n_max: 12,
            ..Default::default()
        },
        5,
    )?;
    let test = generate_synthetic(
        &GenConfig {
            n_scenes: 30,
            n_min: 4,
            n_max: 12,
            far_fraction: 0.6,
            id_prefix: "test-".into(),
            ..Default::default()
        },
        6,
    )?;
    let pc = PredictorConfig {
        d_model: 32,
        d_ff: 64,
        ..Default::default()
    };
    let cfg = TrainConfig {
        optimizer: Optimizer::Adam,
        epochs: 6,
        learning_rate: 2e-3,
        ..Default::default()
    };
    let (predictor, _) = train_predictor(&train, &cfg, &pc, 1)?;
    let report = oracle_eval(&test, &predictor)?;
    println!(
        "baseline ADE {:.3}  FDE {:.3}",
        report.baseline_ade, report.baseline_fde
    );
    println!(
        "oracle   ADE {:.3}  FDE {:.3}",
        report.oracle_ade, report.oracle_fde
    );
    println!(
        "{} of {} scenes improve by removing one person",
        report.improved_scenes,
        report.rows.len()
    );
    for row in report.rows.iter().filter(|r| r.removed_person.is_some()).take(5) {
        println!(
            "  {}: removing person {} lowers ADE {:.3} -> {:.3}",
            row.scene_id,
            row.removed_person.unwrap_or_default(),
            row.baseline_ade,
            row.oracle_ade
        );
    }
    Ok(())
}
