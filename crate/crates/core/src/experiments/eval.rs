//! Baseline versus pruned evaluation, the leave-one-out oracle and the
//! FLOPs sweep.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::flops::pipeline_flops;
use crate::losses::{ade, fde};
use crate::predictor::Predictor;
use crate::scene::{normalize_scene, Point, Scene, Transform};
use crate::selection::{threshold_select, GumbelConfig};

/// One CSV row: `scene_id,ade,fde,n_in,n_kept,flops_ratio`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub scene_id: String,
    pub ade: f64,
    pub fde: f64,
    pub n_in: usize,
    pub n_kept: usize,
    pub flops_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregate {
    /// Mean of per-scene errors.
    pub ade: f64,
    pub fde: f64,
    /// Mean over every predicted step of every scene.
    pub global_ade: f64,
    pub global_fde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRatio {
    pub n_in: usize,
    pub scenes: usize,
    pub keep_rate: f64,
    pub flops_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub threshold: f64,
    pub baseline: Vec<MetricRow>,
    pub pruned: Vec<MetricRow>,
    pub baseline_aggregate: Aggregate,
    pub pruned_aggregate: Aggregate,
    /// Mean over scenes with neighbours of the fraction of neighbours kept.
    pub mean_keep_rate: f64,
    pub mean_flops_ratio: f64,
    pub by_people: Vec<BucketRatio>,
    /// Counts of neighbour scores in ten equal bins over `[0, 1]`.
    pub score_histogram: [usize; 10],
}

/// A scene in the normalised frame with its ground truth and inverse map.
struct Prepared {
    scene_id: String,
    transform: Transform,
    features: crate::autodiff::Tensor,
    truth: Vec<Point>,
}

fn prepare(scene: &Scene, predictor: &Predictor) -> Result<Prepared> {
    let t_obs = predictor.config.t_obs;
    if scene.window_len() != predictor.config.t_pred {
        return Err(Error::Contract(format!(
            "scene {} has window {}, evaluation needs {}",
            scene.scene_id,
            scene.window_len(),
            predictor.config.t_pred
        )));
    }
    let (norm, transform) = normalize_scene(scene, t_obs);
    Ok(Prepared {
        scene_id: scene.scene_id.clone(),
        transform,
        features: predictor.features(&norm)?,
        truth: scene.primary().future(t_obs).to_vec(),
    })
}

fn predict_kept(predictor: &Predictor, p: &Prepared, keep: &[usize]) -> Result<Vec<Point>> {
    let f = p.features.gather_rows(keep)?;
    let y = predictor.predict_from_features(&f, &vec![true; keep.len()])?;
    Ok(y.into_iter().map(|q| p.transform.invert(q)).collect())
}

fn aggregate(rows: &[MetricRow], step_errors: &[Vec<f64>]) -> Aggregate {
    let n = rows.len().max(1) as f64;
    let steps: usize = step_errors.iter().map(Vec::len).sum();
    Aggregate {
        ade: rows.iter().map(|r| r.ade).sum::<f64>() / n,
        fde: rows.iter().map(|r| r.fde).sum::<f64>() / n,
        global_ade: step_errors.iter().flatten().sum::<f64>() / steps.max(1) as f64,
        global_fde: step_errors.iter().filter_map(|e| e.last()).sum::<f64>() / n,
    }
}

fn step_errors(pred: &[Point], truth: &[Point]) -> Vec<f64> {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| ((p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2)).sqrt())
        .collect()
}

fn sort_by_id<T>(v: &mut [T], key: impl Fn(&T) -> &str) {
    v.sort_by(|a, b| key(a).cmp(key(b)));
}

/// Runs every scene through the full predictor and through the pruned
/// pipeline (threshold selection, then physical omission of dropped rows).
pub fn evaluate(
    scenes: &[Scene],
    predictor: &Predictor,
    estimator: &Estimator,
    selection: &GumbelConfig,
) -> Result<ExperimentReport> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput("no scenes to evaluate".into()));
    }
    let mut ordered: Vec<&Scene> = scenes.iter().collect();
    sort_by_id(&mut ordered, |s| s.scene_id.as_str());
    let mut baseline = Vec::with_capacity(scenes.len());
    let mut pruned = Vec::with_capacity(scenes.len());
    let mut base_err = Vec::with_capacity(scenes.len());
    let mut pruned_err = Vec::with_capacity(scenes.len());
    let mut histogram = [0usize; 10];
    let mut keep_rates = Vec::new();
    let mut buckets: BTreeMap<usize, (usize, f64, f64)> = BTreeMap::new();
    for scene in ordered {
        let p = prepare(scene, predictor)?;
        let n = scene.num_people();
        let all: Vec<usize> = (0..n).collect();
        let y = predict_kept(predictor, &p, &all)?;
        baseline.push(MetricRow {
            scene_id: p.scene_id.clone(),
            ade: ade(&y, &p.truth)?,
            fde: fde(&y, &p.truth)?,
            n_in: n,
            n_kept: n,
            flops_ratio: 1.0,
        });
        base_err.push(step_errors(&y, &p.truth));

        let scores = estimator.scores(&p.features)?;
        for &s in &scores {
            histogram[((s * 10.0) as usize).min(9)] += 1;
        }
        let mask = threshold_select(&scores, selection);
        let kept = mask.kept_indices();
        let y = predict_kept(predictor, &p, &kept)?;
        let ratio = pipeline_flops(&predictor.config, &estimator.config, n, kept.len(), true)?.ratio;
        pruned.push(MetricRow {
            scene_id: p.scene_id.clone(),
            ade: ade(&y, &p.truth)?,
            fde: fde(&y, &p.truth)?,
            n_in: n,
            n_kept: kept.len(),
            flops_ratio: ratio,
        });
        pruned_err.push(step_errors(&y, &p.truth));
        let keep_rate = if n > 1 {
            let r = mask.n_neighbours_kept() as f64 / (n - 1) as f64;
            keep_rates.push(r);
            r
        } else {
            1.0
        };
        let b = buckets.entry(n).or_insert((0, 0.0, 0.0));
        b.0 += 1;
        b.1 += keep_rate;
        b.2 += ratio;
    }
    let mean_flops_ratio = pruned.iter().map(|r| r.flops_ratio).sum::<f64>() / pruned.len() as f64;
    Ok(ExperimentReport {
        threshold: selection.threshold,
        baseline_aggregate: aggregate(&baseline, &base_err),
        pruned_aggregate: aggregate(&pruned, &pruned_err),
        baseline,
        pruned,
        mean_keep_rate: if keep_rates.is_empty() {
            1.0
        } else {
            keep_rates.iter().sum::<f64>() / keep_rates.len() as f64
        },
        mean_flops_ratio,
        by_people: buckets
            .into_iter()
            .map(|(n_in, (c, k, r))| BucketRatio {
                n_in,
                scenes: c,
                keep_rate: k / c as f64,
                flops_ratio: r / c as f64,
            })
            .collect(),
        score_histogram: histogram,
    })
}

/// Extrapolates the primary's last observed step at constant velocity.
pub fn constant_velocity(scene: &Scene, t_obs: usize) -> Vec<Point> {
    let obs = scene.primary().observed(t_obs);
    let last = obs[obs.len() - 1];
    let prev = obs[obs.len() - 2];
    let v = [last[0] - prev[0], last[1] - prev[1]];
    (1..=scene.window_len() - t_obs)
        .map(|k| [last[0] + v[0] * k as f64, last[1] + v[1] * k as f64])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub scene_id: String,
    pub n_in: usize,
    pub baseline_ade: f64,
    pub baseline_fde: f64,
    pub oracle_ade: f64,
    pub oracle_fde: f64,
    /// Person whose removal gave the best ADE; `None` when the baseline won.
    pub removed_person: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub rows: Vec<OracleRow>,
    pub baseline_ade: f64,
    pub baseline_fde: f64,
    pub oracle_ade: f64,
    pub oracle_fde: f64,
    /// Scenes where some single removal beat the baseline.
    pub improved_scenes: usize,
}

/// Per scene, the best of the unmasked prediction and every prediction with
/// exactly one neighbour removed.
pub fn oracle_eval(scenes: &[Scene], predictor: &Predictor) -> Result<OracleReport> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput("no scenes for the oracle".into()));
    }
    let mut ordered: Vec<&Scene> = scenes.iter().collect();
    sort_by_id(&mut ordered, |s| s.scene_id.as_str());
    let mut rows = Vec::with_capacity(scenes.len());
    for scene in ordered {
        let p = prepare(scene, predictor)?;
        let n = scene.num_people();
        let all: Vec<usize> = (0..n).collect();
        let y = predict_kept(predictor, &p, &all)?;
        let (b_ade, b_fde) = (ade(&y, &p.truth)?, fde(&y, &p.truth)?);
        let mut best = (b_ade, b_fde, None);
        for j in 1..n {
            let keep: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            let y = predict_kept(predictor, &p, &keep)?;
            let a = ade(&y, &p.truth)?;
            if a < best.0 {
                best = (a, fde(&y, &p.truth)?, Some(scene.tracks[j].person_id));
            }
        }
        rows.push(OracleRow {
            scene_id: p.scene_id,
            n_in: n,
            baseline_ade: b_ade,
            baseline_fde: b_fde,
            oracle_ade: best.0,
            oracle_fde: best.1,
            removed_person: best.2,
        });
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&OracleRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Ok(OracleReport {
        baseline_ade: mean(|r| r.baseline_ade),
        baseline_fde: mean(|r| r.baseline_fde),
        oracle_ade: mean(|r| r.oracle_ade),
        oracle_fde: mean(|r| r.oracle_fde),
        improved_scenes: rows.iter().filter(|r| r.removed_person.is_some()).count(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_people: usize,
    pub baseline: f64,
    pub keep_rate: f64,
    pub n_kept: usize,
    pub with_estimator: f64,
    /// Estimator overhead with nobody pruned (collapsed scores).
    pub collapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Smallest `N` from which the pruned pipeline stays below the baseline
    /// for the rest of the range.
    pub crossover: Option<usize>,
}

/// FLOPs ratios against the full predictor for every `N` in the range,
/// keeping `1 + round(keep_rate(N) * (N - 1))` people.
pub fn flops_sweep(
    predictor: &crate::predictor::PredictorConfig,
    estimator: &crate::estimator::EstimatorConfig,
    n_range: std::ops::RangeInclusive<usize>,
    keep_rate: impl Fn(usize) -> f64,
) -> Result<SweepTable> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::Config(
            "sweep range must be non-empty and start at 1 or more".into(),
        ));
    }
    let mut rows = Vec::new();
    for n in n_range {
        let rate = keep_rate(n).clamp(0.0, 1.0);
        let n_kept = 1 + (rate * (n - 1) as f64).round() as usize;
        rows.push(SweepRow {
            n_people: n,
            baseline: 1.0,
            keep_rate: rate,
            n_kept,
            with_estimator: pipeline_flops(predictor, estimator, n, n_kept, true)?.ratio,
            collapsed: pipeline_flops(predictor, estimator, n, n, true)?.ratio,
        });
    }
    let mut crossover = None;
    for r in rows.iter().rev() {
        if r.with_estimator < 1.0 {
            crossover = Some(r.n_people);
        } else {
            break;
        }
    }
    Ok(SweepTable { rows, crossover })
}

/// Mean keep-rate per scene size from an evaluation, falling back to the
/// overall mean for sizes that were not observed.
pub fn keep_rates_by_people(report: &ExperimentReport) -> impl Fn(usize) -> f64 + '_ {
    move |n| {
        report
            .by_people
            .iter()
            .find(|b| b.n_in == n)
            .map(|b| b.keep_rate)
            .unwrap_or(report.mean_keep_rate)
    }
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("scene_id,ade,fde,n_in,n_kept,flops_ratio\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.scene_id,
            f6(r.ade),
            f6(r.fde),
            r.n_in,
            r.n_kept,
            f6(r.flops_ratio)
        );
    }
    s
}

pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("model,ade,fde,global_ade,global_fde,keep_rate,flops_ratio\n");
    for (name, a, keep, ratio) in [
        ("tp", &report.baseline_aggregate, 1.0, 1.0),
        (
            "tp+ie",
            &report.pruned_aggregate,
            report.mean_keep_rate,
            report.mean_flops_ratio,
        ),
    ] {
        let _ = writeln!(
            s,
            "{name},{},{},{},{},{},{}",
            f6(a.ade),
            f6(a.fde),
            f6(a.global_ade),
            f6(a.global_fde),
            f6(keep),
            f6(ratio)
        );
    }
    s
}

pub fn buckets_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("n_in,scenes,keep_rate,flops_ratio\n");
    for b in &report.by_people {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            b.n_in,
            b.scenes,
            f6(b.keep_rate),
            f6(b.flops_ratio)
        );
    }
    s
}

pub fn histogram_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for (i, c) in report.score_histogram.iter().enumerate() {
        let _ = writeln!(s, "{:.1},{:.1},{c}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
    }
    s
}

pub fn oracle_csv(report: &OracleReport) -> String {
    let mut s =
        String::from("scene_id,n_in,baseline_ade,baseline_fde,oracle_ade,oracle_fde,removed_person\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scene_id,
            r.n_in,
            f6(r.baseline_ade),
            f6(r.baseline_fde),
            f6(r.oracle_ade),
            f6(r.oracle_fde),
            r.removed_person.map(|p| p.to_string()).unwrap_or_default()
        );
    }
    s
}

pub fn oracle_summary_csv(report: &OracleReport) -> String {
    format!(
        "model,ade,fde\nbaseline,{},{}\noracle,{},{}\n",
        f6(report.baseline_ade),
        f6(report.baseline_fde),
        f6(report.oracle_ade),
        f6(report.oracle_fde)
    )
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = String::from("n_people,baseline,keep_rate,n_kept,tp_ie,tp_ie_collapsed\n");
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.n_people,
            f6(r.baseline),
            f6(r.keep_rate),
            r.n_kept,
            f6(r.with_estimator),
            f6(r.collapsed)
        );
    }
    s
}

/// Plain-text score dump: `scene_id person_id score`, one neighbour per line.
pub fn dump_scores(scenes: &[Scene], predictor: &Predictor, estimator: &Estimator) -> Result<String> {
    let mut ordered: Vec<&Scene> = scenes.iter().collect();
    sort_by_id(&mut ordered, |s| s.scene_id.as_str());
    let mut s = String::from("scene_id person_id score\n");
    for scene in ordered {
        let p = prepare(scene, predictor)?;
        let scores = estimator.scores(&p.features)?;
        for (track, score) in scene.tracks[1..].iter().zip(scores) {
            let _ = writeln!(s, "{} {} {}", scene.scene_id, track.person_id, f6(score));
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EstimatorConfig;
    use crate::predictor::PredictorConfig;
    use crate::scene::{generate_synthetic, GenConfig};

    fn models() -> (Predictor, Estimator) {
        let pc = PredictorConfig {
            d_model: 8,
            n_heads: 2,
            n_temporal_layers: 1,
            n_social_layers: 1,
            d_ff: 16,
            ..Default::default()
        };
        let ec = EstimatorConfig {
            d_in: 8,
            d_embed: 8,
            d_ff: 8,
            ..Default::default()
        };
        (Predictor::new(pc, 1).unwrap(), Estimator::new(ec, 2).unwrap())
    }

    fn scenes() -> Vec<Scene> {
        let cfg = GenConfig {
            n_scenes: 6,
            n_min: 1,
            n_max: 6,
            ..Default::default()
        };
        generate_synthetic(&cfg, 4).unwrap()
    }

    #[test]
    fn zero_threshold_reproduces_baseline() {
        let (p, e) = models();
        let sel = GumbelConfig {
            threshold: 0.0,
            ..Default::default()
        };
        let r = evaluate(&scenes(), &p, &e, &sel).unwrap();
        for (a, b) in r.baseline.iter().zip(&r.pruned) {
            assert_eq!((a.ade, a.fde, a.n_in), (b.ade, b.fde, b.n_kept));
        }
        assert_eq!(r.mean_keep_rate, 1.0);
    }

    #[test]
    fn threshold_above_one_keeps_only_the_primary() {
        let (p, e) = models();
        let sel = GumbelConfig {
            threshold: 1.0 + 1e-9,
            ..Default::default()
        };
        let data = scenes();
        let r = evaluate(&data, &p, &e, &sel).unwrap();
        assert!(r.pruned.iter().all(|row| row.n_kept == 1));
        for row in &r.pruned {
            let s = data.iter().find(|s| s.scene_id == row.scene_id).unwrap();
            let alone = p.predict_scene(&s.subset(&[0])).unwrap();
            let truth = s.primary().future(9);
            assert!((ade(&alone, truth).unwrap() - row.ade).abs() < 1e-9);
        }
    }

    #[test]
    fn rows_are_sorted_and_aggregates_recompute() {
        let (p, e) = models();
        let r = evaluate(&scenes(), &p, &e, &GumbelConfig::default()).unwrap();
        assert!(r.baseline.windows(2).all(|w| w[0].scene_id <= w[1].scene_id));
        let mean = r.pruned.iter().map(|x| x.ade).sum::<f64>() / r.pruned.len() as f64;
        assert!((mean - r.pruned_aggregate.ade).abs() < 1e-12);
        assert!((r.pruned_aggregate.ade - r.pruned_aggregate.global_ade).abs() < 1e-9);
    }

    #[test]
    fn oracle_never_loses_to_baseline() {
        let (p, _) = models();
        let r = oracle_eval(&scenes(), &p).unwrap();
        for row in &r.rows {
            assert!(row.oracle_ade <= row.baseline_ade);
            if row.n_in == 1 {
                assert_eq!(row.oracle_ade, row.baseline_ade);
            }
        }
        assert!(r.oracle_ade <= r.baseline_ade);
    }

    #[test]
    fn full_keep_rate_is_overhead_everywhere() {
        let t = flops_sweep(
            &PredictorConfig::default(),
            &EstimatorConfig::default(),
            2..=40,
            |_| 1.0,
        )
        .unwrap();
        assert!(t.rows.iter().all(|r| r.with_estimator > 1.0));
        assert_eq!(t.crossover, None);
        let t = flops_sweep(
            &PredictorConfig::default(),
            &EstimatorConfig::default(),
            2..=40,
            |_| 0.3,
        )
        .unwrap();
        assert!(t.crossover.is_some());
    }

    #[test]
    fn constant_velocity_extrapolates() {
        let s = &scenes()[0];
        let y = constant_velocity(s, 9);
        assert_eq!(y.len(), 12);
        let o = s.primary().observed(9);
        let v = [o[8][0] - o[7][0], o[8][1] - o[7][1]];
        assert!((y[11][0] - (o[8][0] + 12.0 * v[0])).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let rows = vec![MetricRow {
            scene_id: "a".into(),
            ade: 0.5,
            fde: 1.0,
            n_in: 3,
            n_kept: 2,
            flops_ratio: 0.75,
        }];
        assert_eq!(
            metrics_csv(&rows),
            "scene_id,ade,fde,n_in,n_kept,flops_ratio\na,0.500000,1.000000,3,2,0.750000\n"
        );
    }
}
