//! Generate a synthetic crowd, write it as a scene file and read it back.
//!
//! ```bash
//! cargo run --example synthetic_scenes
//! ```

use socialprune::scene::{generate_synthetic, load_scenes, normalize_scene, save_scenes, GenConfig};
use socialprune::Result;

fn main() -> Result<()> {
    let cfg = GenConfig {
        n_scenes: 20,
        n_min: 4,
        n_max: 12,
        ..Default::default()
    };
    let scenes = generate_synthetic(&cfg, 42)?;

    let dir = std::env::temp_dir().join("socialprune-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("scenes.jsonl");
    save_scenes(&path, &scenes)?;
    let loaded = load_scenes(&path, &cfg.window)?;
    println!(
        "wrote {} scenes to {}; read back {} (identical: {})",
        scenes.len(),
        path.display(),
        loaded.scenes.len(),
        loaded.scenes == scenes
    );

    for scene in scenes.iter().take(5) {
        let (norm, _) = normalize_scene(scene, cfg.window.t_obs);
        let closest = norm.tracks[1..]
            .iter()
            .map(|t| {
                let p = t.positions[cfg.window.t_obs - 1];
                (p[0] * p[0] + p[1] * p[1]).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        println!(
            "{}: {} people, nearest neighbour {:.1} m at the last observed step",
            scene.scene_id,
            scene.num_people(),
            closest
        );
    }
    Ok(())
}
