//! Two-phase training: the predictor alone, then the estimator against the
//! frozen predictor.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{derive_seed, Optimizer, Phase, TrainConfig};
use crate::autodiff::{Graph, Tensor};
use crate::error::{Error, Result};
use crate::estimator::{estimate_scores, Estimator, EstimatorConfig};
use crate::losses::{trajectory_loss, variance_loss, VARIANCE_EPS};
use crate::nn::Gate;
use crate::params::{Adam, ParameterStore};
use crate::predictor::{extract_individual_features, predict, Predictor, PredictorConfig};
use crate::scene::{normalize_scene, normalize_scene_rotated, Point, Scene};
use crate::selection::{gumbel_gate, GumbelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TpEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IeEpoch {
    pub epoch: usize,
    pub temperature: f64,
    pub trajectory_loss: f64,
    pub variance_loss: f64,
    pub total_loss: f64,
    pub score_mean: f64,
    pub score_std: f64,
    pub keep_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IeLog {
    pub epochs: Vec<IeEpoch>,
    /// Mean trajectory loss of the very first batch, before any update.
    pub first_batch_trajectory_loss: f64,
}

/// Summary of a set of per-scene score vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreStats {
    pub mean: f64,
    /// Mean over scenes with at least two neighbours of the within-scene
    /// population standard deviation.
    pub std: f64,
    /// Mean over scenes with neighbours of the fraction scoring at or above
    /// the threshold.
    pub keep_rate: f64,
}

pub fn score_stats(scores: &[Vec<f64>], threshold: f64) -> ScoreStats {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut std_sum = 0.0;
    let mut std_n = 0usize;
    let mut keep_sum = 0.0;
    let mut keep_n = 0usize;
    for s in scores.iter().filter(|s| !s.is_empty()) {
        let n = s.len() as f64;
        sum += s.iter().sum::<f64>();
        count += s.len();
        keep_sum += s.iter().filter(|&&v| v >= threshold).count() as f64 / n;
        keep_n += 1;
        if s.len() >= 2 {
            let m = s.iter().sum::<f64>() / n;
            std_sum += (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            std_n += 1;
        }
    }
    let div = |a: f64, b: usize| if b == 0 { 0.0 } else { a / b as f64 };
    ScoreStats {
        mean: div(sum, count),
        std: div(std_sum, std_n),
        keep_rate: div(keep_sum, keep_n),
    }
}

fn future_of(scene: &Scene, t_obs: usize) -> Vec<Point> {
    scene.primary().future(t_obs).to_vec()
}

fn check_scenes(scenes: &[Scene], config: &PredictorConfig) -> Result<()> {
    if scenes.is_empty() {
        return Err(Error::Config("training needs at least one scene".into()));
    }
    if let Some(s) = scenes.iter().find(|s| s.window_len() != config.t_pred) {
        return Err(Error::Contract(format!(
            "scene {} has window {}, training needs {}",
            s.scene_id,
            s.window_len(),
            config.t_pred
        )));
    }
    Ok(())
}

struct Updater {
    adam: Option<Adam>,
    lr: f64,
    max_norm: f64,
}

impl Updater {
    fn new(config: &TrainConfig) -> Self {
        Self {
            adam: (config.optimizer == Optimizer::Adam).then(Adam::default),
            lr: config.learning_rate,
            max_norm: config.max_grad_norm,
        }
    }

    fn step(&mut self, params: &mut ParameterStore) -> Result<f64> {
        match &mut self.adam {
            Some(adam) => adam.step(params, self.lr, self.max_norm),
            None => params.descend(self.lr, self.max_norm),
        }
    }
}

fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch as u64, u64::MAX));
    order.shuffle(&mut rng);
    order
}

/// Fits the predictor to the primary's future with every neighbour visible.
pub fn train_predictor(
    scenes: &[Scene],
    config: &TrainConfig,
    predictor_config: &PredictorConfig,
    init_seed: u64,
) -> Result<(Predictor, Vec<TpEpoch>)> {
    if config.phase != Phase::Tp {
        return Err(Error::Config("train_predictor needs phase = \"tp\"".into()));
    }
    config.validate()?;
    check_scenes(scenes, predictor_config)?;
    let mut model = Predictor::new(predictor_config.clone(), init_seed)?;
    let mut updater = Updater::new(config);
    let t_obs = predictor_config.t_obs;
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let order = epoch_order(scenes.len(), config.seed, epoch);
        let mut loss_sum = 0.0;
        let mut norm_sum = 0.0;
        let mut steps = 0usize;
        for batch in order.chunks(config.batch_size) {
            let inv = 1.0 / batch.len() as f64;
            for &i in batch {
                let scene = if config.rotate {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, epoch as u64, i as u64));
                    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    normalize_scene_rotated(&scenes[i], t_obs, angle).0
                } else {
                    normalize_scene(&scenes[i], t_obs).0
                };
                let mut g = Graph::new();
                let b = model.params.bind(&mut g, true);
                let f = extract_individual_features(&mut g, &b, predictor_config, &scene)?;
                let y = predict(&mut g, &b, predictor_config, f, Gate::All)?;
                let l = trajectory_loss(&mut g, y, &future_of(&scene, t_obs))?;
                let value = g.value(l).item();
                if !value.is_finite() {
                    return Err(Error::Divergence(format!(
                        "trajectory loss {value} on scene {} in epoch {epoch}",
                        scenes[i].scene_id
                    )));
                }
                loss_sum += value;
                let l = g.scale(l, inv)?;
                g.backward(l)?;
                model.params.accumulate_grads(&g, &b);
            }
            norm_sum += updater.step(&mut model.params)?;
            steps += 1;
        }
        let entry = TpEpoch {
            epoch,
            loss: loss_sum / scenes.len() as f64,
            grad_norm: norm_sum / steps as f64,
        };
        log::info!(
            "tp epoch {epoch}: loss {:.5} grad norm {:.4}",
            entry.loss,
            entry.grad_norm
        );
        log.push(entry);
    }
    Ok((model, log))
}

struct IeSample {
    features: Tensor,
    truth: Vec<Point>,
}

/// Trains the estimator through straight-through Gumbel gates on the frozen
/// predictor's social encoder. Scenes without neighbours carry no signal
/// and are skipped.
pub fn train_estimator(
    scenes: &[Scene],
    config: &TrainConfig,
    predictor: &Predictor,
    estimator_config: &EstimatorConfig,
    init_seed: u64,
) -> Result<(Estimator, IeLog)> {
    if config.phase != Phase::Ie {
        return Err(Error::Config("train_estimator needs phase = \"ie\"".into()));
    }
    config.validate()?;
    let pcfg = &predictor.config;
    check_scenes(scenes, pcfg)?;
    if estimator_config.d_in != pcfg.d_model {
        return Err(Error::Config(format!(
            "estimator d_in {} does not match predictor d_model {}",
            estimator_config.d_in, pcfg.d_model
        )));
    }
    let samples: Vec<IeSample> = scenes
        .iter()
        .filter(|s| s.num_people() >= 2)
        .map(|s| {
            let (norm, _) = normalize_scene(s, pcfg.t_obs);
            Ok(IeSample {
                features: predictor.features(&norm)?,
                truth: future_of(&norm, pcfg.t_obs),
            })
        })
        .collect::<Result<_>>()?;
    if samples.is_empty() {
        return Err(Error::Config(
            "estimator training needs scenes with neighbours".into(),
        ));
    }
    let mut model = Estimator::new(estimator_config.clone(), init_seed)?;
    let mut updater = Updater::new(config);
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut first_batch = None;
    for epoch in 0..config.epochs {
        let gumbel = GumbelConfig {
            temperature: config.gumbel.temperature_at(epoch),
            ..config.gumbel.clone()
        };
        let order = epoch_order(samples.len(), config.seed, epoch);
        let (mut lt_sum, mut lv_sum, mut lv_n, mut total_sum) = (0.0, 0.0, 0usize, 0.0);
        let mut epoch_scores = Vec::with_capacity(samples.len());
        for batch in order.chunks(config.batch_size) {
            let b_t = batch.len() as f64;
            let b_v = batch.iter().filter(|&&i| samples[i].features.rows() >= 3).count() as f64;
            let mut batch_lt = 0.0;
            for &i in batch {
                let sample = &samples[i];
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, epoch as u64, i as u64));
                let mut g = Graph::new();
                let be = model.params.bind(&mut g, true);
                let bp = predictor.params.bind(&mut g, false);
                let f = g.constant(sample.features.clone());
                let scores =
                    estimate_scores(&mut g, &be, &model.config, f)?.expect("samples have neighbours");
                epoch_scores.push(g.value(scores).data().to_vec());
                let (gate, _) = gumbel_gate(&mut g, scores, &gumbel, &mut rng)?;
                let y = predict(&mut g, &bp, pcfg, f, Gate::Soft(gate))?;
                let lt = trajectory_loss(&mut g, y, &sample.truth)?;
                let lt_value = g.value(lt).item();
                batch_lt += lt_value;
                let mut loss = g.scale(lt, 1.0 / b_t)?;
                let mut total = lt_value;
                if let Some(lv) = variance_loss(&mut g, scores, VARIANCE_EPS)? {
                    let lv_value = g.value(lv).item();
                    lv_sum += lv_value;
                    lv_n += 1;
                    total += config.alpha * lv_value;
                    if config.alpha > 0.0 {
                        let w = g.scale(lv, config.alpha / b_v)?;
                        loss = g.add(loss, w)?;
                    }
                }
                if !total.is_finite() {
                    return Err(Error::Divergence(format!(
                        "estimator loss {total} in epoch {epoch}"
                    )));
                }
                lt_sum += lt_value;
                total_sum += total;
                g.backward(loss)?;
                model.params.accumulate_grads(&g, &be);
            }
            first_batch.get_or_insert(batch_lt / b_t);
            updater.step(&mut model.params)?;
        }
        let stats = score_stats(&epoch_scores, config.gumbel.threshold);
        let n = samples.len() as f64;
        let entry = IeEpoch {
            epoch,
            temperature: gumbel.temperature,
            trajectory_loss: lt_sum / n,
            variance_loss: if lv_n == 0 { 0.0 } else { lv_sum / lv_n as f64 },
            total_loss: total_sum / n,
            score_mean: stats.mean,
            score_std: stats.std,
            keep_rate: stats.keep_rate,
        };
        log::info!(
            "ie epoch {epoch}: L_t {:.5} L_v {:.4} score mean {:.3} std {:.3} keep {:.3}",
            entry.trajectory_loss,
            entry.variance_loss,
            entry.score_mean,
            entry.score_std,
            entry.keep_rate
        );
        epochs.push(entry);
    }
    Ok((
        model,
        IeLog {
            epochs,
            first_batch_trajectory_loss: first_batch.unwrap_or(0.0),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_synthetic, GenConfig};

    fn tiny_predictor() -> PredictorConfig {
        PredictorConfig {
            d_model: 8,
            n_heads: 2,
            n_temporal_layers: 1,
            n_social_layers: 1,
            d_ff: 16,
            ..Default::default()
        }
    }

    fn scenes(n: usize) -> Vec<Scene> {
        let cfg = GenConfig {
            n_scenes: n,
            n_min: 2,
            n_max: 5,
            ..Default::default()
        };
        generate_synthetic(&cfg, 2).unwrap()
    }

    #[test]
    fn zero_scenes_is_a_config_error() {
        let r = train_predictor(&[], &TrainConfig::default(), &tiny_predictor(), 0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn wrong_phase_is_rejected() {
        let cfg = TrainConfig {
            phase: Phase::Ie,
            ..Default::default()
        };
        assert!(train_predictor(&scenes(2), &cfg, &tiny_predictor(), 0).is_err());
    }

    #[test]
    fn estimator_training_leaves_predictor_untouched() {
        let data = scenes(6);
        let tp_cfg = TrainConfig {
            epochs: 1,
            batch_size: 3,
            ..Default::default()
        };
        let (tp, _) = train_predictor(&data, &tp_cfg, &tiny_predictor(), 1).unwrap();
        let before = tp.clone();
        let ie_cfg = TrainConfig {
            phase: Phase::Ie,
            epochs: 2,
            batch_size: 3,
            ..Default::default()
        };
        let ecfg = EstimatorConfig {
            d_in: 8,
            d_embed: 8,
            d_ff: 8,
            ..Default::default()
        };
        let (ie, log) = train_estimator(&data, &ie_cfg, &tp, &ecfg, 2).unwrap();
        assert_eq!(tp, before);
        assert_eq!(log.epochs.len(), 2);
        assert_ne!(ie.params, Estimator::new(ecfg, 2).unwrap().params);
    }

    #[test]
    fn score_stats_examples() {
        let s = score_stats(&[vec![0.2, 0.8], vec![0.6], vec![]], 0.5);
        assert!((s.mean - 1.6 / 3.0).abs() < 1e-12);
        assert!((s.std - 0.3).abs() < 1e-12);
        assert!((s.keep_rate - 0.75).abs() < 1e-12);
    }
}
