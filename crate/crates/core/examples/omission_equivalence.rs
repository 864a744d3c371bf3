//! Masking a person inside the social encoder gives the same prediction as
//! deleting them from the input.
//!
//! ```bash
//! cargo run --example omission_equivalence
//! ```

use socialprune::predictor::{Predictor, PredictorConfig};
use socialprune::scene::{generate_synthetic, normalize_scene, GenConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let scenes = generate_synthetic(
        &GenConfig {
            n_scenes: 5,
            n_min: 6,
            n_max: 10,
            ..Default::default()
        },
        3,
    )?;
    let predictor = Predictor::new(PredictorConfig::default(), 1)?;
    for scene in &scenes {
        let (norm, _) = normalize_scene(scene, predictor.config.t_obs);
        let features = predictor.features(&norm)?;
        let n = scene.num_people();
        let keep: Vec<bool> = (0..n).map(|i| i == 0 || i % 2 == 1).collect();
        let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();

        let masked = predictor.predict_from_features(&features, &keep)?;
        let reduced =
            predictor.predict_from_features(&features.gather_rows(&kept)?, &vec![true; kept.len()])?;
        let diff = masked
            .iter()
            .zip(&reduced)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        println!(
            "{}: kept {}/{} people, max |masked - reduced| = {diff:.2e}",
            scene.scene_id,
            kept.len(),
            n
        );
    }
    Ok(())
}
