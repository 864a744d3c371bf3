//! Training objectives and displacement metrics.

use crate::autodiff::{Graph, Tensor, Var};
use crate::error::{Error, Result};
use crate::scene::Point;

/// Small constant inside the variance loss logarithm.
pub const VARIANCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub trajectory: f64,
    pub variance_term: f64,
    pub alpha: f64,
    pub total: f64,
}

/// `total = trajectory + alpha * variance_term`.
pub fn total_loss(trajectory: f64, variance_term: f64, alpha: f64) -> Result<LossBreakdown> {
    if !(alpha >= 0.0) {
        return Err(Error::Config(format!("alpha must be non-negative, got {alpha}")));
    }
    Ok(LossBreakdown {
        trajectory,
        variance_term,
        alpha,
        total: trajectory + alpha * variance_term,
    })
}

fn check_pair(pred: &[Point], truth: &[Point], op: &str) -> Result<()> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::Contract(format!(
            "{op}: prediction has {} steps, ground truth {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Mean over predicted steps of the squared L2 displacement.
pub fn trajectory_loss_value(pred: &[Point], truth: &[Point]) -> Result<f64> {
    check_pair(pred, truth, "trajectory_loss")?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2))
        .sum::<f64>()
        / pred.len() as f64)
}

/// Differentiable [`trajectory_loss_value`] for a `steps x 2` prediction.
pub fn trajectory_loss(g: &mut Graph, pred: Var, truth: &[Point]) -> Result<Var> {
    let (steps, cols) = g.value(pred).dims2()?;
    if steps != truth.len() || cols != 2 {
        return Err(Error::Contract(format!(
            "trajectory_loss: prediction {:?}, ground truth {} steps",
            [steps, cols],
            truth.len()
        )));
    }
    let t = g.constant(Tensor::matrix(steps, 2, truth.iter().flat_map(|p| *p).collect())?);
    let d = g.sub(pred, t)?;
    let sq = g.mul(d, d)?;
    let s = g.sum(sq)?;
    g.scale(s, 1.0 / steps as f64)
}

/// `-log(population variance + eps)` of a score row; `None` when fewer than
/// two scores are available.
pub fn variance_loss(g: &mut Graph, scores: Var, eps: f64) -> Result<Option<Var>> {
    if g.value(scores).numel() < 2 {
        return Ok(None);
    }
    let v = g.variance(scores)?;
    let v = g.add_scalar(v, eps)?;
    let l = g.log(v)?;
    Ok(Some(g.scale(l, -1.0)?))
}

pub fn variance_loss_value(scores: &[f64], eps: f64) -> Option<f64> {
    if scores.len() < 2 {
        return None;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    Some(-(var + eps).ln())
}

/// Average displacement error, metres.
pub fn ade(pred: &[Point], truth: &[Point]) -> Result<f64> {
    check_pair(pred, truth, "ade")?;
    Ok(pred.iter().zip(truth).map(|(p, t)| dist(*p, *t)).sum::<f64>() / pred.len() as f64)
}

/// Final displacement error, metres.
pub fn fde(pred: &[Point], truth: &[Point]) -> Result<f64> {
    check_pair(pred, truth, "fde")?;
    Ok(dist(pred[pred.len() - 1], truth[truth.len() - 1]))
}
