//! Straight-through binary-concrete sampling keeps each neighbour with
//! probability equal to its score, whatever the temperature.
//!
//! ```bash
//! cargo run --release --example gumbel_selection
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use socialprune::selection::{gumbel_sample, threshold_select, GumbelConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let scores = [0.1, 0.3, 0.5, 0.7, 0.9];
    let draws = 100_000;
    for tau in [0.1, 1.0, 5.0] {
        let cfg = GumbelConfig {
            temperature: tau,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut kept = [0usize; 5];
        for _ in 0..draws {
            let mask = gumbel_sample(&scores, &cfg, &mut rng)?;
            for (k, &h) in kept.iter_mut().zip(&mask.hard[1..]) {
                *k += h as usize;
            }
        }
        let freq: Vec<String> = kept
            .iter()
            .map(|&k| format!("{:.4}", k as f64 / draws as f64))
            .collect();
        println!("tau {tau:>4}: keep frequency {}", freq.join(" "));
    }
    let mask = threshold_select(&scores, &GumbelConfig::default());
    println!("threshold 0.5 keeps people {:?}", mask.kept_indices());
    Ok(())
}
