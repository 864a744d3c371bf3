use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socialprune"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).to_string();
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 1, "expected exactly one line, got {s:?}");
    lines[0].to_string()
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--config", "nope.toml"], dir.path());
    assert!(!o.status.success());
    assert!(stderr_line(&o).starts_with("error: io: "));
}

#[test]
fn invalid_config_is_reported_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[predictor]\nd_model = 30\n").unwrap();
    let o = run(&["gen-data", "--config", "bad.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error: config: "));
}

#[test]
fn estimator_training_needs_a_predictor_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train-ie", "--out", "run"], dir.path());
    assert!(!o.status.success());
    assert!(stderr_line(&o).starts_with("error: checkpoint: "));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["eval", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error: usage: "));
}

#[test]
fn negative_alpha_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train-ie", "--alpha=-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_line(&o).starts_with("error: config: "));
}

#[test]
fn gen_data_writes_loadable_scene_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[train_data.synthetic]\nn_scenes = 3\n[test_data.synthetic]\nn_scenes = 2\n",
    )
    .unwrap();
    let o = run(
        &["gen-data", "--config", "c.toml", "--out", "d", "--seed", "5"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let w = socialprune::scene::WindowConfig::default();
    let train = socialprune::scene::load_scenes(&dir.path().join("d/train.jsonl"), &w).unwrap();
    let test = socialprune::scene::load_scenes(&dir.path().join("d/test.jsonl"), &w).unwrap();
    assert_eq!((train.scenes.len(), test.scenes.len()), (3, 2));
    assert!(test.scenes.iter().all(|s| s.num_people() >= 8));
}

#[test]
fn flops_sweep_runs_without_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["flops-sweep", "--out", "s"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("s/flops_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 40);
    assert_eq!(
        std::fs::read_to_string(dir.path().join("s/flops_crossover.txt")).unwrap(),
        "none\n"
    );
}
