//! End-to-end acceptance run. Prints one `[PASS]`/`[FAIL]` line per
//! criterion and fails if any criterion fails.
//!
//! ```bash
//! cargo test -p socialprune --test acceptance -- --nocapture
//! ```

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socialprune::autodiff::{grad_check, Axis, Graph, Tensor, Var};
use socialprune::estimator::{estimate_scores, Estimator, EstimatorConfig};
use socialprune::experiments::{
    ablate_vl, evaluate, flops_sweep, keep_rates_by_people, oracle_eval, train_predictor, ExperimentConfig,
    Phase,
};
use socialprune::flops::{estimator_flops, pipeline_flops, predictor_flops};
use socialprune::losses::{trajectory_loss, variance_loss, VARIANCE_EPS};
use socialprune::nn::Gate;
use socialprune::predictor::{extract_individual_features, predict, Predictor, PredictorConfig};
use socialprune::scene::{generate_synthetic, normalize_scene, GenConfig};
use socialprune::selection::{gumbel_sample, GumbelConfig};
use socialprune::Result;

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(o: &Outcome) {
    println!(
        "[{}] {}. {}: {}",
        if o.passed { "PASS" } else { "FAIL" },
        o.id,
        o.name,
        o.detail
    );
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Fixed, shape-matched weights turning any output into a scalar.
fn project(g: &mut Graph, y: Var) -> Result<Var> {
    let shape = g.value(y).shape().to_vec();
    let n: usize = shape.iter().product();
    let w = (0..n).map(|k| (1.3 * k as f64 + 0.7).sin()).collect();
    let w = g.constant(Tensor::new(&shape, w)?);
    let p = g.mul(y, w)?;
    g.sum(p)
}

type Builder = fn(&mut Graph, &[Var]) -> Result<Var>;

fn gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = |r: usize, c: usize, rng: &mut ChaCha8Rng| Tensor::uniform(&[r, c], -1.5, 1.5, rng);
    // away from the ReLU kink and the clamp bounds
    let signed = |rng: &mut ChaCha8Rng| {
        let d = (0..12)
            .map(|_| {
                let v: f64 = rng.random_range(0.2..1.5);
                if rng.random_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Tensor::matrix(3, 4, d).unwrap()
    };
    let a = m(3, 4, &mut rng);
    let b = m(3, 4, &mut rng);
    let c = m(4, 5, &mut rng);
    let sq = m(4, 4, &mut rng);
    let gate = Tensor::uniform(&[1, 4], 0.1, 1.0, &mut rng);
    let pos = Tensor::uniform(&[3, 4], 0.2, 2.0, &mut rng);
    let gamma = Tensor::uniform(&[1, 4], 0.5, 1.5, &mut rng);
    let beta = Tensor::uniform(&[1, 4], -0.5, 0.5, &mut rng);
    let pred = m(12, 2, &mut rng);
    let scores = Tensor::uniform(&[1, 7], 0.05, 0.95, &mut rng);

    let cases: Vec<(&str, Builder, Vec<Tensor>, f64)> = vec![
        (
            "matmul",
            |g, x| {
                let y = g.matmul(x[0], x[1])?;
                project(g, y)
            },
            vec![a.clone(), c.clone()],
            1e-4,
        ),
        (
            "add",
            |g, x| {
                let y = g.add(x[0], x[1])?;
                project(g, y)
            },
            vec![a.clone(), b.clone()],
            1e-4,
        ),
        (
            "sub",
            |g, x| {
                let y = g.sub(x[0], x[1])?;
                project(g, y)
            },
            vec![a.clone(), b.clone()],
            1e-4,
        ),
        (
            "mul",
            |g, x| {
                let y = g.mul(x[0], x[1])?;
                project(g, y)
            },
            vec![a.clone(), b.clone()],
            1e-4,
        ),
        (
            "scale",
            |g, x| {
                let y = g.scale(x[0], -2.5)?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "add_scalar",
            |g, x| {
                let y = g.add_scalar(x[0], 0.3)?;
                let y = g.mul(y, y)?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "concat rows",
            |g, x| {
                let y = g.concat(&[x[0], x[1]], Axis::Rows)?;
                project(g, y)
            },
            vec![a.clone(), b.clone()],
            1e-4,
        ),
        (
            "concat cols",
            |g, x| {
                let y = g.concat(&[x[0], x[1]], Axis::Cols)?;
                project(g, y)
            },
            vec![a.clone(), b.clone()],
            1e-4,
        ),
        (
            "row_softmax",
            |g, x| {
                let y = g.row_softmax(x[0])?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "gated_row_softmax",
            |g, x| {
                let y = g.gated_row_softmax(x[0], x[1], false)?;
                project(g, y)
            },
            vec![sq.clone(), gate.clone()],
            1e-4,
        ),
        (
            "gated_row_softmax self",
            |g, x| {
                let y = g.gated_row_softmax(x[0], x[1], true)?;
                project(g, y)
            },
            vec![sq.clone(), gate.clone()],
            1e-4,
        ),
        (
            "layer_norm",
            |g, x| {
                let y = g.layer_norm(x[0], x[1], x[2])?;
                project(g, y)
            },
            vec![a.clone(), gamma, beta],
            1e-3,
        ),
        (
            "sigmoid",
            |g, x| {
                let y = g.sigmoid(x[0])?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "relu",
            |g, x| {
                let y = g.relu(x[0])?;
                project(g, y)
            },
            vec![signed(&mut rng)],
            1e-4,
        ),
        (
            "log",
            |g, x| {
                let y = g.log(x[0])?;
                project(g, y)
            },
            vec![pos],
            1e-4,
        ),
        (
            "sum",
            |g, x| {
                let y = g.mul(x[0], x[0])?;
                g.sum(y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "mean",
            |g, x| {
                let y = g.mul(x[0], x[0])?;
                g.mean(y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "mean_rows",
            |g, x| {
                let y = g.mean_rows(x[0])?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        ("variance", |g, x| g.variance(x[0]), vec![a.clone()], 1e-4),
        (
            "masked_fill",
            |g, x| {
                let y = g.masked_fill(x[0], &[true, false, false, true], -3.0)?;
                let y = g.row_softmax(y)?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "clamp",
            |g, x| {
                let y = g.clamp(x[0], -0.1, 0.1)?;
                project(g, y)
            },
            vec![signed(&mut rng)],
            1e-4,
        ),
        (
            "straight_through",
            |g, x| {
                let s = g.sigmoid(x[0])?;
                let h = g.value(s).clone();
                let y = g.straight_through(h, s)?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "gather_rows",
            |g, x| {
                let y = g.gather_rows(x[0], &[2, 0, 2])?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "slice_rows",
            |g, x| {
                let y = g.slice_rows(x[0], 1, 2)?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "slice_cols",
            |g, x| {
                let y = g.slice_cols(x[0], 1, 2)?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "transpose",
            |g, x| {
                let y = g.transpose(x[0])?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "reshape",
            |g, x| {
                let y = g.reshape(x[0], &[2, 6])?;
                project(g, y)
            },
            vec![a.clone()],
            1e-4,
        ),
        (
            "trajectory loss",
            |g, x| {
                let truth: Vec<[f64; 2]> = (0..12)
                    .map(|t| [0.3 * t as f64, (t as f64 * 0.5).sin()])
                    .collect();
                trajectory_loss(g, x[0], &truth)
            },
            vec![pred],
            1e-4,
        ),
        (
            "variance loss",
            |g, x| Ok(variance_loss(g, x[0], VARIANCE_EPS)?.expect("two or more scores")),
            vec![scores],
            1e-4,
        ),
    ];

    let start = Instant::now();
    let mut failed = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, builder, leaves, tol) in &cases {
        match grad_check(builder, leaves, 1e-5, *tol) {
            Ok(r) => {
                worst = worst.max(r.worst());
                if !r.passed {
                    failed.push(format!("{name} ({:.1e})", r.worst()));
                }
            }
            Err(e) => failed.push(format!("{name} ({e})")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "gradient correctness",
        passed: failed.is_empty() && secs < 60.0,
        detail: if failed.is_empty() {
            format!(
                "{} checks, worst relative error {worst:.1e}, {secs:.1}s",
                cases.len()
            )
        } else {
            format!("failed: {}", failed.join(", "))
        },
    }
}

fn straight_through_fidelity() -> Outcome {
    let start = Instant::now();
    let draws = 100_000;
    let mut worst_z: f64 = 0.0;
    let mut failed = Vec::new();
    for (k, &tau) in [0.1, 1.0, 5.0].iter().enumerate() {
        let cfg = GumbelConfig {
            temperature: tau,
            ..Default::default()
        };
        let scores = [0.1, 0.3, 0.5, 0.7, 0.9];
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let mut kept = [0usize; 5];
        for _ in 0..draws {
            let m = gumbel_sample(&scores, &cfg, &mut rng).expect("valid scores");
            for (i, h) in m.hard[1..].iter().enumerate() {
                kept[i] += *h as usize;
            }
        }
        for (i, &s) in scores.iter().enumerate() {
            let freq = kept[i] as f64 / draws as f64;
            let bound = 3.0 * (s * (1.0 - s) / draws as f64).sqrt();
            worst_z = worst_z.max((freq - s).abs() / bound * 3.0);
            if (freq - s).abs() > bound {
                failed.push(format!("s={s} tau={tau}: {freq:.4}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 2,
        name: "straight-through fidelity",
        passed: failed.is_empty() && secs < 10.0,
        detail: if failed.is_empty() {
            format!("15 cells, worst deviation {worst_z:.2} sigma, {secs:.1}s")
        } else {
            format!("outside 3 sigma: {}", failed.join(", "))
        },
    }
}

fn omission_equivalence() -> Result<Outcome> {
    let cfg = PredictorConfig::default();
    let predictor = Predictor::new(cfg.clone(), 21)?;
    let scenes = generate_synthetic(
        &GenConfig {
            n_scenes: 100,
            n_min: 2,
            n_max: 24,
            ..Default::default()
        },
        77,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut worst: f64 = 0.0;
    for scene in &scenes {
        let n = scene.num_people();
        let keep: Vec<bool> = (0..n).map(|i| i == 0 || rng.random_bool(0.5)).collect();
        let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
        let (norm, _) = normalize_scene(scene, cfg.t_obs);
        let masked = predictor.predict_from_features(&predictor.features(&norm)?, &keep)?;
        let (reduced_scene, _) = normalize_scene(&scene.subset(&kept), cfg.t_obs);
        let reduced =
            predictor.predict_from_features(&predictor.features(&reduced_scene)?, &vec![true; kept.len()])?;
        for (p, q) in masked.iter().zip(&reduced) {
            worst = worst.max((p[0] - q[0]).abs()).max((p[1] - q[1]).abs());
        }
    }

    let estimator = Estimator::new(
        EstimatorConfig {
            d_in: cfg.d_model,
            ..Default::default()
        },
        22,
    )?;
    let zero = GumbelConfig {
        threshold: 0.0,
        ..Default::default()
    };
    let r = evaluate(&scenes, &predictor, &estimator, &zero)?;
    let identical = r.baseline.len() == r.pruned.len()
        && r.baseline
            .iter()
            .zip(&r.pruned)
            .all(|(b, p)| b.scene_id == p.scene_id && b.ade == p.ade && b.fde == p.fde && p.n_kept == b.n_in)
        && r.baseline_aggregate == r.pruned_aggregate;
    Ok(Outcome {
        id: 3,
        name: "omission equivalence",
        passed: worst <= 1e-10 && identical,
        detail: format!(
            "100 scenes, max |masked - reduced| {worst:.1e}; threshold 0 reproduces baseline: {identical}"
        ),
    })
}

/// Instrumented forward passes against the analytic model.
fn flops_oracle() -> Result<(f64, String)> {
    let configs = [
        (
            PredictorConfig {
                d_model: 16,
                d_ff: 32,
                n_heads: 2,
                ..Default::default()
            },
            EstimatorConfig {
                d_in: 16,
                d_embed: 16,
                d_ff: 16,
                ..Default::default()
            },
            5,
        ),
        (
            PredictorConfig {
                d_model: 32,
                d_ff: 64,
                n_heads: 4,
                n_temporal_layers: 1,
                ..Default::default()
            },
            EstimatorConfig {
                d_in: 32,
                d_embed: 24,
                d_ff: 48,
                n_heads: 3,
                ..Default::default()
            },
            9,
        ),
        (
            PredictorConfig {
                d_model: 24,
                d_ff: 48,
                n_heads: 3,
                n_social_layers: 3,
                ..Default::default()
            },
            EstimatorConfig {
                d_in: 24,
                d_embed: 32,
                d_ff: 32,
                n_layers: 2,
                ..Default::default()
            },
            14,
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (k, (pc, ec, n)) in configs.iter().enumerate() {
        let scene = &generate_synthetic(
            &GenConfig {
                n_scenes: 1,
                n_min: *n,
                n_max: *n,
                ..Default::default()
            },
            k as u64,
        )?[0];
        let predictor = Predictor::new(pc.clone(), k as u64)?;
        let estimator = Estimator::new(ec.clone(), k as u64)?;
        let (norm, _) = normalize_scene(scene, pc.t_obs);

        let mut g = Graph::new();
        let b = predictor.params.bind(&mut g, false);
        let f = extract_individual_features(&mut g, &b, pc, &norm)?;
        predict(&mut g, &b, pc, f, Gate::All)?;
        let tp = (g.flops() as f64 / predictor_flops(pc, *n).total as f64 - 1.0).abs();

        let mut g = Graph::new();
        let b = estimator.params.bind(&mut g, false);
        let f = g.constant(predictor.features(&norm)?);
        estimate_scores(&mut g, &b, ec, f)?;
        let ie = (g.flops() as f64 / estimator_flops(ec, *n) as f64 - 1.0).abs();
        worst = worst.max(tp).max(ie);
        parts.push(format!("{:.2}%/{:.2}%", 100.0 * tp, 100.0 * ie));
    }
    Ok((worst, parts.join(" ")))
}

struct Trained {
    cfg: ExperimentConfig,
    predictor: Predictor,
    train_secs: f64,
}

fn benchmark() -> Result<Trained> {
    let cfg = ExperimentConfig::load(&workspace_root().join("configs/benchmark.toml"))?;
    let train = generate_synthetic(&cfg.generator(false), cfg.data_seed(false))?;
    let start = Instant::now();
    let (predictor, _) = train_predictor(
        &train,
        &cfg.train_config(Phase::Tp),
        &cfg.predictor_config(),
        cfg.init_seed(Phase::Tp),
    )?;
    Ok(Trained {
        cfg,
        predictor,
        train_secs: start.elapsed().as_secs_f64(),
    })
}

fn trained_criteria(t: &Trained) -> Result<Vec<Outcome>> {
    let cfg = &t.cfg;
    let train = generate_synthetic(&cfg.generator(false), cfg.data_seed(false))?;
    let test = generate_synthetic(&cfg.generator(true), cfg.data_seed(true))?;
    let mut out = Vec::new();

    let start = Instant::now();
    let ablation = ablate_vl(&train, &test, &t.predictor, cfg, &[1.0, 0.0])?;
    let ie_secs = start.elapsed().as_secs_f64();
    let with = &ablation.arms[0].0;
    let without = &ablation.arms[1].0;
    out.push(Outcome {
        id: 4,
        name: "variance-loss anti-collapse",
        passed: without.score_std < 0.05
            && without.keep_rate > 0.95
            && with.score_std > 0.1
            && with.keep_rate < 0.8
            && ie_secs < 15.0 * 60.0,
        detail: format!(
            "alpha=0: std {:.3} keep {:.3} (want < 0.05, > 0.95); alpha=1: std {:.3} keep {:.3} (want > 0.1, < 0.8); {:.0}s",
            without.score_std, without.keep_rate, with.score_std, with.keep_rate, ie_secs
        ),
    });

    let estimator = &ablation.arms[0].1;
    let report = evaluate(&test, &t.predictor, estimator, &cfg.selection)?;
    let base = report.baseline_aggregate.ade;
    let pruned = report.pruned_aggregate.ade;
    let rel = pruned / base - 1.0;
    let total = t.train_secs + ie_secs;
    out.push(Outcome {
        id: 5,
        name: "efficiency-accuracy trade-off",
        passed: rel <= 0.05 && report.mean_keep_rate <= 0.6 && total < 30.0 * 60.0,
        detail: format!(
            "ADE {pruned:.4} vs {base:.4} ({:+.1}%), keep {:.3} of neighbours, {} test scenes with N in [{}, {}], {total:.0}s",
            100.0 * rel,
            report.mean_keep_rate,
            test.len(),
            cfg.test_data.synthetic.n_min,
            cfg.test_data.synthetic.n_max
        ),
    });

    let pc = cfg.predictor_config();
    let ec = &cfg.estimator;
    let overhead = (1..=60).all(|n| {
        pipeline_flops(&pc, ec, n, n, true)
            .map(|p| p.ratio >= 1.0)
            .unwrap_or(false)
    });
    let monotone = (2..=60).all(|n| {
        (1..n).all(|k| {
            let a = pipeline_flops(&pc, ec, n, k, true).unwrap().ratio;
            let b = pipeline_flops(&pc, ec, n, k + 1, true).unwrap().ratio;
            a < b
        })
    });
    let sweep = flops_sweep(
        &pc,
        ec,
        cfg.sweep.n_min..=cfg.sweep.n_max,
        keep_rates_by_people(&report),
    )?;
    let below = sweep
        .crossover
        .map(|c| {
            sweep
                .rows
                .iter()
                .filter(|r| r.n_people >= c)
                .all(|r| r.with_estimator < 1.0)
        })
        .unwrap_or(false);
    let (oracle_err, oracle_detail) = flops_oracle()?;
    out.push(Outcome {
        id: 6,
        name: "FLOPs crossover",
        passed: overhead && monotone && below && oracle_err < 0.02,
        detail: format!(
            "keep-all ratio >= 1: {overhead}; monotone: {monotone}; crossover at N = {}; ratio at N = {}: {:.3}; analytic vs counted (predictor/estimator) {oracle_detail}",
            sweep.crossover.map(|c| c.to_string()).unwrap_or_else(|| "none".into()),
            cfg.sweep.n_max,
            sweep.rows.last().map(|r| r.with_estimator).unwrap_or(f64::NAN)
        ),
    });

    let start = Instant::now();
    let oracle = oracle_eval(&test, &t.predictor)?;
    let secs = start.elapsed().as_secs_f64();
    let consistent = oracle.oracle_ade <= oracle.baseline_ade
        && (oracle.oracle_ade < oracle.baseline_ade || oracle.improved_scenes == 0);
    out.push(Outcome {
        id: 7,
        name: "oracle dominance",
        passed: consistent && oracle.oracle_ade < oracle.baseline_ade && secs < 300.0,
        detail: format!(
            "oracle ADE {:.4} < baseline {:.4}, {} of {} scenes improved, {secs:.0}s",
            oracle.oracle_ade,
            oracle.baseline_ade,
            oracle.improved_scenes,
            oracle.rows.len()
        ),
    });
    Ok(out)
}

const TINY: &str = r#"
seed = 5
out = "run"

[train_data.synthetic]
n_scenes = 6
n_min = 2
n_max = 6

[test_data.synthetic]
n_scenes = 4
n_min = 3
n_max = 6

[predictor]
d_model = 16
d_ff = 32
n_heads = 2
n_temporal_layers = 1
n_social_layers = 1

[estimator]
d_in = 16
d_embed = 16
d_ff = 16

[train_tp]
epochs = 2
batch_size = 4

[train_ie]
phase = "ie"
epochs = 2
batch_size = 4

[sweep]
n_min = 2
n_max = 12
"#;

const COMMANDS: [&str; 8] = [
    "gen-data",
    "train-tp",
    "train-ie",
    "eval",
    "flops-sweep",
    "oracle",
    "ablate-vl",
    "dump-scores",
];

fn run_all(dir: &Path) -> std::result::Result<Vec<(String, Vec<u8>)>, String> {
    std::fs::write(dir.join("tiny.toml"), TINY).map_err(|e| e.to_string())?;
    for cmd in COMMANDS {
        let o = Command::new(env!("CARGO_BIN_EXE_socialprune"))
            .args([cmd, "--config", "tiny.toml", "--seed", "5"])
            .current_dir(dir)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(format!("{cmd}: {}", String::from_utf8_lossy(&o.stderr).trim()));
        }
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("run"))
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).expect("readable output"),
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().expect("temp dir");
    let b = tempfile::tempdir().expect("temp dir");
    let (passed, detail) = match (run_all(a.path()), run_all(b.path())) {
        (Ok(x), Ok(y)) => {
            let differing: Vec<&str> = x
                .iter()
                .zip(&y)
                .filter(|(p, q)| p != q)
                .map(|(p, _)| p.0.as_str())
                .collect();
            let same_set = x.len() == y.len() && x.iter().zip(&y).all(|(p, q)| p.0 == q.0);
            (
                same_set && differing.is_empty(),
                if differing.is_empty() {
                    format!("8 commands twice, {} output files byte-identical", x.len())
                } else {
                    format!("differing outputs: {}", differing.join(", "))
                },
            )
        }
        (Err(e), _) | (_, Err(e)) => (false, e),
    };
    Outcome {
        id: 8,
        name: "determinism",
        passed,
        detail,
    }
}

#[test]
fn acceptance() {
    let mut outcomes = vec![gradients(), straight_through_fidelity()];
    outcomes.push(omission_equivalence().expect("omission run"));
    for o in &outcomes {
        report(o);
    }
    let trained = benchmark().expect("benchmark predictor trains");
    println!("predictor trained in {:.0}s", trained.train_secs);
    for o in trained_criteria(&trained).expect("benchmark criteria run") {
        report(&o);
        outcomes.push(o);
    }
    let d = determinism();
    report(&d);
    outcomes.push(d);

    let failed: Vec<usize> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "{} of {} criteria passed",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
