//! Analytic FLOPs of the pipeline against an instrumented forward pass,
//! and the pruning ratio as the number of people grows.
//!
//! ```bash
//! cargo run --release --example flops_model
//! ```

use socialprune::autodiff::Graph;
use socialprune::estimator::{estimate_scores, Estimator, EstimatorConfig};
use socialprune::flops::{estimator_flops, pipeline_flops, predictor_flops};
use socialprune::nn::Gate;
use socialprune::predictor::{extract_individual_features, predict, Predictor, PredictorConfig};
use socialprune::scene::{generate_synthetic, normalize_scene, GenConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let pc = PredictorConfig::default();
    let ec = EstimatorConfig::default();
    let predictor = Predictor::new(pc.clone(), 0)?;
    let estimator = Estimator::new(ec.clone(), 0)?;

    println!(
        "{:>3} {:>12} {:>12} {:>12} {:>12}",
        "N", "predictor", "counted", "estimator", "counted"
    );
    for n in [1, 4, 8, 16] {
        let scene = &generate_synthetic(
            &GenConfig {
                n_scenes: 1,
                n_min: n,
                n_max: n,
                ..Default::default()
            },
            n as u64,
        )?[0];
        let (norm, _) = normalize_scene(scene, pc.t_obs);
        let mut g = Graph::new();
        let b = predictor.params.bind(&mut g, false);
        let f = extract_individual_features(&mut g, &b, &pc, &norm)?;
        predict(&mut g, &b, &pc, f, Gate::All)?;
        let counted_tp = g.flops();

        let mut g = Graph::new();
        let b = estimator.params.bind(&mut g, false);
        let f = g.constant(predictor.features(&norm)?);
        estimate_scores(&mut g, &b, &ec, f)?;
        println!(
            "{n:>3} {:>12} {:>12} {:>12} {:>12}",
            predictor_flops(&pc, n).total,
            counted_tp,
            estimator_flops(&ec, n),
            g.flops()
        );
    }

    println!("\nratio against the full predictor when keeping 30% of neighbours:");
    for n in [2, 5, 10, 20, 40] {
        let kept = 1 + ((n - 1) as f64 * 0.3).round() as usize;
        let r = pipeline_flops(&pc, &ec, n, kept, true)?;
        let all = pipeline_flops(&pc, &ec, n, n, true)?;
        println!(
            "N={n:>2}: keep {kept:>2} -> {:.3}   keep all -> {:.3}",
            r.ratio, all.ratio
        );
    }
    Ok(())
}
