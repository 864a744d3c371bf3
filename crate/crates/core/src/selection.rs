//! Turning importance scores into keep/drop decisions.
//!
//! Training uses a binary-concrete relaxation per neighbour: with logit
//! `l = log(s / (1 - s))` and logistic noise `g`, the soft value is
//! `sigmoid((l + g) / tau)` and the hard decision is `soft > 0.5`, which
//! happens with probability exactly `s` for any `tau`. The forward pass uses
//! the hard decision; the backward pass treats it as the soft value.
//! Inference thresholds the raw scores.

use rand::Rng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Axis, Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Scores are clamped to `[SCORE_CLAMP, 1 - SCORE_CLAMP]` before the logit.
pub const SCORE_CLAMP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    Training,
    Inference,
}

/// Per-person decisions, primary first. `hard[0]` is always true.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMask {
    pub hard: Vec<bool>,
    pub soft: Vec<f64>,
    pub mode: SelectionMode,
}

impl SelectionMask {
    pub fn kept_indices(&self) -> Vec<usize> {
        self.hard
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect()
    }

    /// People kept, primary included.
    pub fn n_kept(&self) -> usize {
        self.hard.iter().filter(|&&k| k).count()
    }

    pub fn n_neighbours_kept(&self) -> usize {
        self.n_kept() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GumbelConfig {
    pub temperature: f64,
    /// Multiplicative per-epoch temperature decay, off when `None`.
    pub anneal: Option<f64>,
    pub threshold: f64,
    /// Keep at least this many neighbours (highest scores first) at inference.
    pub min_keep: Option<usize>,
}

impl Default for GumbelConfig {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            anneal: None,
            threshold: 0.5,
            min_keep: None,
        }
    }
}

impl GumbelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        if let Some(a) = self.anneal {
            if !(a > 0.0) {
                return Err(Error::Config(format!("anneal factor must be positive, got {a}")));
            }
        }
        Ok(())
    }

    pub fn temperature_at(&self, epoch: usize) -> f64 {
        match self.anneal {
            Some(a) => self.temperature * a.powi(epoch as i32),
            None => self.temperature,
        }
    }
}

/// Logistic(0, 1) draw as the difference of two standard Gumbel draws.
pub fn logistic_noise<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let gumbel = Gumbel::new(0.0, 1.0).expect("unit Gumbel");
    gumbel.sample(rng) - gumbel.sample(rng)
}

fn clamp_score(s: f64) -> f64 {
    let c = s.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    if c != s {
        log::debug!("clamped score {s} to {c} before logit");
    }
    c
}

/// One straight-through sample per neighbour.
pub fn gumbel_sample<R: Rng + ?Sized>(
    scores: &[f64],
    config: &GumbelConfig,
    rng: &mut R,
) -> Result<SelectionMask> {
    config.validate()?;
    let temperature = config.temperature;
    let mut hard = Vec::with_capacity(scores.len() + 1);
    let mut soft = Vec::with_capacity(scores.len() + 1);
    hard.push(true);
    soft.push(1.0);
    for &s in scores {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain {
                op: "gumbel_sample",
                detail: format!("score {s} outside [0, 1]"),
            });
        }
        let c = clamp_score(s);
        let logit = c.ln() - (1.0 - c).ln();
        let z = (logit + logistic_noise(rng)) / temperature;
        let p = 1.0 / (1.0 + (-z).exp());
        hard.push(p > 0.5);
        soft.push(p);
    }
    Ok(SelectionMask {
        hard,
        soft,
        mode: SelectionMode::Training,
    })
}

/// Graph version of [`gumbel_sample`] for a `1 x (N-1)` score row. Returns
/// the `1 x N` gate (primary entry fixed at 1) whose forward value is the
/// hard mask and whose gradient flows into the soft relaxation.
pub fn gumbel_gate<R: Rng + ?Sized>(
    g: &mut Graph,
    scores: Var,
    config: &GumbelConfig,
    rng: &mut R,
) -> Result<(Var, SelectionMask)> {
    config.validate()?;
    let temperature = config.temperature;
    let m = g.value(scores).numel();
    if g.value(scores).data().iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::Domain {
            op: "gumbel_gate",
            detail: "score outside [0, 1]".into(),
        });
    }
    let clamped = g.clamp(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)?;
    let neg = g.scale(clamped, -1.0)?;
    let complement = g.add_scalar(neg, 1.0)?;
    let log_s = g.log(clamped)?;
    let log_c = g.log(complement)?;
    let logit = g.sub(log_s, log_c)?;
    let noise: Vec<f64> = (0..m).map(|_| logistic_noise(rng)).collect();
    let noise = g.constant(Tensor::matrix(1, m, noise)?);
    let z = g.add(logit, noise)?;
    let z = g.scale(z, 1.0 / temperature)?;
    let soft = g.sigmoid(z)?;
    let soft_vals = g.value(soft).data().to_vec();
    let hard_vals: Vec<f64> = soft_vals
        .iter()
        .map(|&p| if p > 0.5 { 1.0 } else { 0.0 })
        .collect();
    let gate = g.straight_through(Tensor::matrix(1, m, hard_vals.clone())?, soft)?;
    let one = g.constant(Tensor::scalar(1.0));
    let full = g.concat(&[one, gate], Axis::Cols)?;
    let mut hard = vec![true];
    hard.extend(hard_vals.iter().map(|&h| h == 1.0));
    let mut soft = vec![1.0];
    soft.extend(soft_vals);
    Ok((
        full,
        SelectionMask {
            hard,
            soft,
            mode: SelectionMode::Training,
        },
    ))
}

/// Keeps neighbour `i` iff `scores[i] >= threshold`, then applies the
/// optional top-k floor.
pub fn threshold_select(scores: &[f64], config: &GumbelConfig) -> SelectionMask {
    let mut hard = vec![true];
    hard.extend(scores.iter().map(|&s| s >= config.threshold));
    if let Some(k) = config.min_keep {
        let want = k.min(scores.len());
        let have = hard.iter().skip(1).filter(|&&h| h).count();
        if have < want {
            let mut order: Vec<usize> = (0..scores.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            for &i in order.iter().take(want) {
                hard[i + 1] = true;
            }
        }
    }
    let mut soft = vec![1.0];
    soft.extend_from_slice(scores);
    SelectionMask {
        hard,
        soft,
        mode: SelectionMode::Inference,
    }
}
