//! Score every neighbour of a scene and show which ones a 0.5 threshold
//! would keep, next to their distance from the primary.
//!
//! ```bash
//! cargo run --example importance_scores
//! ```

use socialprune::estimator::{Estimator, EstimatorConfig};
use socialprune::predictor::{Predictor, PredictorConfig};
use socialprune::scene::{generate_synthetic, normalize_scene, GenConfig};
use socialprune::selection::{threshold_select, GumbelConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let scene = generate_synthetic(
        &GenConfig {
            n_scenes: 1,
            n_min: 8,
            n_max: 8,
            ..Default::default()
        },
        17,
    )?
    .remove(0);
    let predictor = Predictor::new(PredictorConfig::default(), 0)?;
    let estimator = Estimator::new(
        EstimatorConfig {
            init_score_bias: 0.5,
            ..Default::default()
        },
        0,
    )?;
    let (norm, _) = normalize_scene(&scene, predictor.config.t_obs);
    let scores = estimator.scores(&predictor.features(&norm)?)?;
    let mask = threshold_select(&scores, &GumbelConfig::default());
    println!("{:>7} {:>10} {:>7} {:>5}", "person", "distance", "score", "keep");
    for (i, track) in norm.tracks.iter().enumerate().skip(1) {
        let p = track.positions[predictor.config.t_obs - 1];
        println!(
            "{:>7} {:>9.1}m {:>7.3} {:>5}",
            track.person_id,
            (p[0] * p[0] + p[1] * p[1]).sqrt(),
            scores[i - 1],
            mask.hard[i]
        );
    }
    Ok(())
}
