//! Importance estimator: one score in `(0, 1)` per neighbour.
//!
//! Feature rows from the predictor's individual encoder are projected to the
//! estimator width, passed through a compact transformer in which the
//! primary's token queries every person, and each neighbour's output goes
//! through a two-layer head and a sigmoid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::nn::{self, Gate};
use crate::params::{Bindings, Checkpoint, ParameterStore};

pub const CHECKPOINT_KIND: &str = "importance-estimator";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorAttention {
    /// Only the primary token queries; neighbours receive their share of its
    /// attention.
    PrimaryQuery,
    /// Ordinary self-attention among all people.
    SelfAttention,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Width of incoming feature rows (the predictor's `d_model`).
    pub d_in: usize,
    pub d_embed: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub attention: EstimatorAttention,
    /// Initial bias of the final score layer (sigmoid input).
    pub init_score_bias: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            d_in: 64,
            d_embed: 64,
            n_heads: 2,
            n_layers: 1,
            d_ff: 64,
            attention: EstimatorAttention::PrimaryQuery,
            init_score_bias: 0.0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_embed == 0 || self.n_heads == 0 || self.d_embed % self.n_heads != 0 {
            return Err(Error::Config(format!(
                "d_embed {} must be a positive multiple of n_heads {}",
                self.d_embed, self.n_heads
            )));
        }
        if self.d_in == 0 || self.n_layers == 0 || self.d_ff == 0 {
            return Err(Error::Config(
                "estimator widths and depth must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn init_params(config: &EstimatorConfig, seed: u64) -> Result<ParameterStore> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.d_embed;
    let mut s = ParameterStore::new();
    nn::init_linear(&mut s, "est.in", config.d_in, d, &mut rng);
    for l in 0..config.n_layers {
        nn::init_block(&mut s, &format!("est.l{l}"), d, config.d_ff, &mut rng);
    }
    nn::init_layer_norm(&mut s, "est.ln_f", d);
    nn::init_linear(&mut s, "est.head1", d, d, &mut rng);
    nn::init_linear(&mut s, "est.head2", d, 1, &mut rng);
    if let Some(bias) = s.get_mut("est.head2.b") {
        bias.data_mut()[0] = config.init_score_bias;
    }
    Ok(s)
}

/// Scores as a `1 x (N-1)` row, neighbour order preserved. `None` when the
/// scene has no neighbours.
pub fn estimate_scores(
    g: &mut Graph,
    b: &Bindings,
    config: &EstimatorConfig,
    features: Var,
) -> Result<Option<Var>> {
    let (n, width) = g.value(features).dims2()?;
    if width != config.d_in {
        return Err(Error::Contract(format!(
            "feature width {width}, estimator expects {}",
            config.d_in
        )));
    }
    if n < 2 {
        return Ok(None);
    }
    let mut x = nn::linear(g, b, "est.in", features)?;
    for l in 0..config.n_layers {
        let prefix = format!("est.l{l}");
        x = match config.attention {
            EstimatorAttention::PrimaryQuery => nn::primary_query_block(g, b, &prefix, x, config.n_heads)?,
            EstimatorAttention::SelfAttention => {
                nn::transformer_block(g, b, &prefix, x, config.n_heads, None, Gate::All)?
            }
        };
    }
    let x = nn::layer_norm(g, b, "est.ln_f", x)?;
    let neighbours = g.slice_rows(x, 1, n - 1)?;
    let h = nn::linear(g, b, "est.head1", neighbours)?;
    let h = g.relu(h)?;
    let logits = nn::linear(g, b, "est.head2", h)?;
    let s = g.sigmoid(logits)?;
    Ok(Some(g.transpose(s)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub config: EstimatorConfig,
    pub params: ParameterStore,
}

impl Estimator {
    pub fn new(config: EstimatorConfig, seed: u64) -> Result<Self> {
        let params = init_params(&config, seed)?;
        Ok(Self { config, params })
    }

    /// Neighbour scores for precomputed feature rows; empty for `N = 1`.
    pub fn scores(&self, features: &Tensor) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let b = self.params.bind(&mut g, false);
        let f = g.constant(features.clone());
        Ok(match estimate_scores(&mut g, &b, &self.config, f)? {
            Some(v) => g.value(v).data().to_vec(),
            None => Vec::new(),
        })
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
        let config: EstimatorConfig = serde_json::from_value(ck.config)
            .map_err(|e| Error::Checkpoint(format!("estimator config: {e}")))?;
        let template = init_params(&config, 0)?;
        ck.params.check_layout(&template)?;
        Ok(Self {
            config,
            params: ck.params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn features(n: usize, seed: u64) -> Tensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::uniform(&[n, 16], -2.0, 2.0, &mut rng)
    }

    fn estimator(attention: EstimatorAttention) -> Estimator {
        let cfg = EstimatorConfig {
            d_in: 16,
            d_embed: 16,
            d_ff: 16,
            attention,
            ..Default::default()
        };
        Estimator::new(cfg, 3).unwrap()
    }

    #[test]
    fn scores_lie_in_unit_interval() {
        for mode in [
            EstimatorAttention::PrimaryQuery,
            EstimatorAttention::SelfAttention,
        ] {
            let e = estimator(mode);
            let s = e.scores(&features(9, 1)).unwrap();
            assert_eq!(s.len(), 8);
            assert!(s.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn single_person_has_no_scores() {
        let e = estimator(EstimatorAttention::PrimaryQuery);
        assert!(e.scores(&features(1, 1)).unwrap().is_empty());
    }

    #[test]
    fn permuting_neighbours_permutes_scores() {
        let e = estimator(EstimatorAttention::PrimaryQuery);
        let f = features(6, 2);
        let perm = [0, 3, 1, 5, 2, 4];
        let s = e.scores(&f).unwrap();
        let sp = e.scores(&f.gather_rows(&perm).unwrap()).unwrap();
        for (k, &p) in perm[1..].iter().enumerate() {
            assert!((sp[k] - s[p - 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicate_neighbours_score_equally() {
        let e = estimator(EstimatorAttention::PrimaryQuery);
        let f = features(5, 3).gather_rows(&[0, 1, 2, 2, 4]).unwrap();
        let s = e.scores(&f).unwrap();
        assert!((s[1] - s[2]).abs() < 1e-10);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let e = estimator(EstimatorAttention::PrimaryQuery);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = Tensor::uniform(&[4, 8], -1.0, 1.0, &mut rng);
        assert!(matches!(e.scores(&bad), Err(Error::Contract(_))));
    }
}
