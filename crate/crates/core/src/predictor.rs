//! Transformer trajectory predictor.
//!
//! Each person's observed track is embedded step by step and run through a
//! temporal encoder on its own, then mean-pooled into one feature row. A
//! social encoder mixes the feature rows across people under an optional
//! gate, and the decoder reads the primary's token and emits per-step
//! displacements that are summed into positions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Axis, Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::{self, Gate};
use crate::params::{Bindings, Checkpoint, ParameterStore};
use crate::scene::{normalize_scene, Point, Scene, WindowConfig};

pub const CHECKPOINT_KIND: &str = "trajectory-predictor";

/// Per-step input channels: position and displacement, both in x and y.
pub const INPUT_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_temporal_layers: usize,
    pub n_social_layers: usize,
    pub d_ff: usize,
    pub t_obs: usize,
    pub t_pred: usize,
    /// Multiplier applied to positions (metres) before embedding.
    pub position_scale: f64,
    /// Multiplier applied to per-step displacements; its inverse scales the
    /// decoder output back to metres.
    pub displacement_scale: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_temporal_layers: 2,
            n_social_layers: 2,
            d_ff: 128,
            t_obs: 9,
            t_pred: 21,
            position_scale: 0.2,
            displacement_scale: 2.0,
        }
    }
}

impl PredictorConfig {
    pub fn with_window(mut self, w: &WindowConfig) -> Self {
        self.t_obs = w.t_obs;
        self.t_pred = w.t_pred;
        self
    }

    pub fn horizon(&self) -> usize {
        self.t_pred - self.t_obs
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_model {} must be a positive multiple of n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.n_temporal_layers == 0 || self.n_social_layers == 0 || self.d_ff == 0 {
            return Err(Error::Config("layer counts and d_ff must be at least 1".into()));
        }
        if self.t_obs < 2 || self.t_obs >= self.t_pred {
            return Err(Error::Config(format!(
                "need 2 <= t_obs < t_pred, got {} / {}",
                self.t_obs, self.t_pred
            )));
        }
        Ok(())
    }
}

pub fn init_params(config: &PredictorConfig, seed: u64) -> Result<ParameterStore> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.d_model;
    let mut s = ParameterStore::new();
    nn::init_linear(&mut s, "temporal.embed", INPUT_DIM, d, &mut rng);
    s.insert_xavier("temporal.pos", config.t_obs, d, &mut rng);
    for l in 0..config.n_temporal_layers {
        nn::init_block(&mut s, &format!("temporal.l{l}"), d, config.d_ff, &mut rng);
    }
    nn::init_layer_norm(&mut s, "temporal.ln_f", d);
    for l in 0..config.n_social_layers {
        nn::init_block(&mut s, &format!("social.l{l}"), d, config.d_ff, &mut rng);
    }
    nn::init_layer_norm(&mut s, "social.ln_f", d);
    nn::init_linear(&mut s, "decoder.fc1", d, config.d_ff, &mut rng);
    nn::init_linear(&mut s, "decoder.fc2", config.d_ff, 2 * config.horizon(), &mut rng);
    // Start from near-zero displacements so early training is stable.
    if let Some(w) = s.get_mut("decoder.fc2.w") {
        w.data_mut().iter_mut().for_each(|v| *v *= 0.1);
    }
    Ok(s)
}

/// `(N * t_obs) x INPUT_DIM` input rows for a normalised scene.
pub fn input_matrix(scene: &Scene, config: &PredictorConfig) -> Result<Tensor> {
    let len = scene.window_len();
    if len != config.t_obs && len != config.t_pred {
        return Err(Error::Contract(format!(
            "scene {} has window {len}, predictor expects {} or {}",
            scene.scene_id, config.t_obs, config.t_pred
        )));
    }
    let t = config.t_obs;
    let mut data = Vec::with_capacity(scene.num_people() * t * INPUT_DIM);
    for track in &scene.tracks {
        let obs = track.observed(t);
        for (k, p) in obs.iter().enumerate() {
            let prev = if k == 0 { *p } else { obs[k - 1] };
            data.extend_from_slice(&[
                p[0] * config.position_scale,
                p[1] * config.position_scale,
                (p[0] - prev[0]) * config.displacement_scale,
                (p[1] - prev[1]) * config.displacement_scale,
            ]);
        }
    }
    Tensor::matrix(scene.num_people() * t, INPUT_DIM, data)
}

/// Per-person feature rows (`N x d_model`) from a normalised scene. Row `i`
/// depends on person `i`'s track only.
pub fn extract_individual_features(
    g: &mut Graph,
    b: &Bindings,
    config: &PredictorConfig,
    scene: &Scene,
) -> Result<Var> {
    let n = scene.num_people();
    let t = config.t_obs;
    let input = g.constant(input_matrix(scene, config)?);
    let x = nn::linear(g, b, "temporal.embed", input)?;
    let pos = b.get("temporal.pos")?;
    let tiled = if n == 1 {
        pos
    } else {
        g.concat(&vec![pos; n], Axis::Rows)?
    };
    let mut x = g.add(x, tiled)?;
    for l in 0..config.n_temporal_layers {
        x = nn::transformer_block(
            g,
            b,
            &format!("temporal.l{l}"),
            x,
            config.n_heads,
            Some(t),
            Gate::All,
        )?;
    }
    let x = nn::layer_norm(g, b, "temporal.ln_f", x)?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let seg = g.slice_rows(x, i * t, t)?;
        rows.push(g.mean_rows(seg)?);
    }
    if n == 1 {
        Ok(rows[0])
    } else {
        g.concat(&rows, Axis::Rows)
    }
}

fn cumulative_sum_matrix(h: usize) -> Tensor {
    let mut t = Tensor::zeros(&[h, h]);
    for i in 0..h {
        for j in 0..=i {
            t.data_mut()[i * h + j] = 1.0;
        }
    }
    t
}

fn check_gate(g: &Graph, features: Var, gate: &Gate<'_>) -> Result<()> {
    let n = g.value(features).rows();
    match gate {
        Gate::All => Ok(()),
        Gate::Hard(keep) => {
            if keep.len() != n {
                return Err(Error::Contract(format!("mask of {} for {n} people", keep.len())));
            }
            if !keep[0] {
                return Err(Error::Contract("the primary person cannot be masked".into()));
            }
            Ok(())
        }
        Gate::Soft(v) => {
            let gv = g.value(*v);
            if gv.shape() != [1, n] {
                return Err(Error::Contract(format!(
                    "gate shape {:?} for {n} people",
                    gv.shape()
                )));
            }
            if gv.data()[0] != 1.0 {
                return Err(Error::Contract("the primary person's gate must be 1".into()));
            }
            Ok(())
        }
    }
}

/// Primary's future positions (`horizon x 2`) in the normalised frame.
pub fn predict(
    g: &mut Graph,
    b: &Bindings,
    config: &PredictorConfig,
    features: Var,
    gate: Gate<'_>,
) -> Result<Var> {
    check_gate(g, features, &gate)?;
    let mut x = features;
    for l in 0..config.n_social_layers {
        x = nn::transformer_block(g, b, &format!("social.l{l}"), x, config.n_heads, None, gate)?;
    }
    let x = nn::layer_norm(g, b, "social.ln_f", x)?;
    let primary = g.slice_rows(x, 0, 1)?;
    let h = nn::linear(g, b, "decoder.fc1", primary)?;
    let h = g.relu(h)?;
    let out = nn::linear(g, b, "decoder.fc2", h)?;
    let horizon = config.horizon();
    let steps = g.reshape(out, &[horizon, 2])?;
    let steps = g.scale(steps, 1.0 / config.displacement_scale)?;
    let cum = g.constant(cumulative_sum_matrix(horizon));
    g.matmul(cum, steps)
}

fn to_points(t: &Tensor) -> Vec<Point> {
    t.data().chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Trained predictor with convenience inference entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub config: PredictorConfig,
    pub params: ParameterStore,
}

impl Predictor {
    pub fn new(config: PredictorConfig, seed: u64) -> Result<Self> {
        let params = init_params(&config, seed)?;
        Ok(Self { config, params })
    }

    /// Feature rows for an already normalised scene.
    pub fn features(&self, scene: &Scene) -> Result<Tensor> {
        let mut g = Graph::new();
        let b = self.params.bind(&mut g, false);
        let f = extract_individual_features(&mut g, &b, &self.config, scene)?;
        Ok(g.value(f).clone())
    }

    /// Prediction in the normalised frame from precomputed features.
    pub fn predict_from_features(&self, features: &Tensor, keep: &[bool]) -> Result<Vec<Point>> {
        let mut g = Graph::new();
        let b = self.params.bind(&mut g, false);
        let f = g.constant(features.clone());
        let gate = if keep.iter().all(|&k| k) {
            Gate::All
        } else {
            Gate::Hard(keep)
        };
        let y = predict(&mut g, &b, &self.config, f, gate)?;
        Ok(to_points(g.value(y)))
    }

    /// Prediction in the scene's own coordinates using every person.
    pub fn predict_scene(&self, scene: &Scene) -> Result<Vec<Point>> {
        let (norm, tf) = normalize_scene(scene, self.config.t_obs);
        let f = self.features(&norm)?;
        let keep = vec![true; scene.num_people()];
        Ok(self
            .predict_from_features(&f, &keep)?
            .into_iter()
            .map(|p| tf.invert(p))
            .collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: CHECKPOINT_KIND.into(),
            config: serde_json::to_value(&self.config).expect("config serialises"),
            params: self.params.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.kind != CHECKPOINT_KIND {
            return Err(Error::Checkpoint(format!(
                "expected a {CHECKPOINT_KIND} checkpoint, found {}",
                ck.kind
            )));
        }
        let config: PredictorConfig = serde_json::from_value(ck.config)
            .map_err(|e| Error::Checkpoint(format!("predictor config: {e}")))?;
        let template = init_params(&config, 0)?;
        ck.params.check_layout(&template)?;
        Ok(Self {
            config,
            params: ck.params,
        })
    }
}
