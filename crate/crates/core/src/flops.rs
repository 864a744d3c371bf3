//! Analytic floating point operation counts at batch size 1.
//!
//! Counting rules: a linear layer over `n` tokens costs `2 n d_in d_out`
//! (multiply-adds plus bias); an attention layer costs `8 n d^2` for its four
//! projections, `4 n^2 d` for scores and value aggregation and `3 h n^2` for
//! the softmax; layer norm `8 n d`; residual adds `n d`; ReLU one per element.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorAttention, EstimatorConfig};
use crate::predictor::{PredictorConfig, INPUT_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlopsReport {
    pub temporal_encoder: u64,
    pub social_encoder: u64,
    pub decoder: u64,
    pub estimator: u64,
    pub total: u64,
    pub n_people_in: usize,
    pub n_people_kept: usize,
}

impl FlopsReport {
    fn new(temporal: u64, social: u64, decoder: u64, estimator: u64, n_in: usize, n_kept: usize) -> Self {
        Self {
            temporal_encoder: temporal,
            social_encoder: social,
            decoder,
            estimator,
            total: temporal + social + decoder + estimator,
            n_people_in: n_in,
            n_people_kept: n_kept,
        }
    }
}

pub fn linear_flops(n: usize, d_in: usize, d_out: usize) -> u64 {
    (2 * n * d_in * d_out) as u64
}

pub fn layer_norm_flops(n: usize, d: usize) -> u64 {
    (8 * n * d) as u64
}

pub fn attention_flops(n: usize, d: usize, heads: usize) -> u64 {
    (8 * n * d * d + 4 * n * n * d + 3 * heads * n * n) as u64
}

/// Pre-norm block: two layer norms, attention, two residuals, feed-forward.
pub fn block_flops(n: usize, d: usize, d_ff: usize, heads: usize) -> u64 {
    2 * layer_norm_flops(n, d)
        + attention_flops(n, d, heads)
        + 2 * (n * d) as u64
        + linear_flops(n, d, d_ff)
        + (n * d_ff) as u64
        + linear_flops(n, d_ff, d)
}

fn temporal_per_person(c: &PredictorConfig) -> u64 {
    let t = c.t_obs;
    let d = c.d_model;
    linear_flops(t, INPUT_DIM, d)
        + (t * d) as u64
        + c.n_temporal_layers as u64 * block_flops(t, d, c.d_ff, c.n_heads)
        + layer_norm_flops(t, d)
        + (t * d) as u64
}

fn social(c: &PredictorConfig, n: usize) -> u64 {
    c.n_social_layers as u64 * block_flops(n, c.d_model, c.d_ff, c.n_heads) + layer_norm_flops(n, c.d_model)
}

fn decoder(c: &PredictorConfig) -> u64 {
    let h = c.horizon();
    linear_flops(1, c.d_model, c.d_ff)
        + c.d_ff as u64
        + linear_flops(1, c.d_ff, 2 * h)
        + (2 * h) as u64
        + (2 * h * (2 * h - 1)) as u64
}

/// Predictor cost for `n_people` inputs.
pub fn predictor_flops(config: &PredictorConfig, n_people: usize) -> FlopsReport {
    FlopsReport::new(
        n_people as u64 * temporal_per_person(config),
        social(config, n_people),
        decoder(config),
        0,
        n_people,
        n_people,
    )
}

/// Estimator cost for `n_people` inputs (primary included).
pub fn estimator_flops(config: &EstimatorConfig, n_people: usize) -> u64 {
    if n_people < 2 {
        return 0;
    }
    let n = n_people;
    let d = config.d_embed;
    let h = config.n_heads;
    let layer = match config.attention {
        EstimatorAttention::SelfAttention => block_flops(n, d, config.d_ff, h),
        EstimatorAttention::PrimaryQuery => {
            let attn = linear_flops(1, d, d)
                + 2 * linear_flops(n, d, d)
                + (n * (2 * d - h)) as u64
                + (h * n) as u64
                + (h * (4 * n - 1)) as u64
                + (n * d) as u64
                + linear_flops(n, d, d);
            2 * layer_norm_flops(n, d)
                + attn
                + 2 * (n * d) as u64
                + linear_flops(n, d, config.d_ff)
                + (n * config.d_ff) as u64
                + linear_flops(n, config.d_ff, d)
        }
    };
    let m = n - 1;
    linear_flops(n, config.d_in, d)
        + config.n_layers as u64 * layer
        + layer_norm_flops(n, d)
        + linear_flops(m, d, d)
        + (m * d) as u64
        + linear_flops(m, d, 1)
        + 3 * m as u64
}

/// Pipeline cost against the all-people predictor baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PipelineFlops {
    pub report: FlopsReport,
    pub baseline_total: u64,
    pub ratio: f64,
}

/// Without the estimator: predictor at `n_in`. With it: estimator at `n_in`
/// plus predictor at `n_kept`.
pub fn pipeline_flops(
    predictor: &PredictorConfig,
    estimator: &EstimatorConfig,
    n_in: usize,
    n_kept: usize,
    use_estimator: bool,
) -> Result<PipelineFlops> {
    if n_kept < 1 || n_kept > n_in {
        return Err(Error::Contract(format!(
            "need 1 <= n_kept ({n_kept}) <= n_in ({n_in})"
        )));
    }
    let baseline = predictor_flops(predictor, n_in);
    let report = if use_estimator {
        let p = predictor_flops(predictor, n_kept);
        FlopsReport::new(
            p.temporal_encoder,
            p.social_encoder,
            p.decoder,
            estimator_flops(estimator, n_in),
            n_in,
            n_kept,
        )
    } else {
        baseline
    };
    Ok(PipelineFlops {
        report,
        baseline_total: baseline.total,
        ratio: report.total as f64 / baseline.total as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_linear_layer() {
        assert_eq!(linear_flops(10, 64, 64), 81_920);
    }

    #[test]
    fn predictor_cost_grows_with_people() {
        let c = PredictorConfig::default();
        for n in 1..50 {
            assert!(predictor_flops(&c, n + 1).total > predictor_flops(&c, n).total);
        }
        assert_eq!(predictor_flops(&c, 7), predictor_flops(&c, 7));
    }

    #[test]
    fn report_total_is_sum_of_parts() {
        let r = pipeline_flops(
            &PredictorConfig::default(),
            &EstimatorConfig::default(),
            12,
            5,
            true,
        )
        .unwrap()
        .report;
        assert_eq!(
            r.total,
            r.temporal_encoder + r.social_encoder + r.decoder + r.estimator
        );
        assert!(r.n_people_kept <= r.n_people_in);
    }

    #[test]
    fn no_estimator_means_zero_estimator_cost() {
        let p = pipeline_flops(
            &PredictorConfig::default(),
            &EstimatorConfig::default(),
            10,
            10,
            false,
        )
        .unwrap();
        assert_eq!(p.report.estimator, 0);
        assert_eq!(p.ratio, 1.0);
    }

    #[test]
    fn keeping_everyone_is_pure_overhead() {
        for n in 2..40 {
            let p = pipeline_flops(
                &PredictorConfig::default(),
                &EstimatorConfig::default(),
                n,
                n,
                true,
            )
            .unwrap();
            assert!(p.ratio > 1.0);
        }
    }

    #[test]
    fn pruning_pays_at_twenty_people() {
        let p = pipeline_flops(
            &PredictorConfig::default(),
            &EstimatorConfig::default(),
            20,
            5,
            true,
        )
        .unwrap();
        assert!(p.ratio < 1.0, "{}", p.ratio);
    }

    #[test]
    fn ratio_is_monotone_in_kept_count() {
        let pc = PredictorConfig::default();
        let ec = EstimatorConfig::default();
        for n_in in [3, 10, 25] {
            let ratios: Vec<f64> = (1..=n_in)
                .map(|k| pipeline_flops(&pc, &ec, n_in, k, true).unwrap().ratio)
                .collect();
            assert!(ratios.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn estimator_is_a_small_fraction_of_the_predictor() {
        let pc = PredictorConfig::default();
        let ec = EstimatorConfig::default();
        for n in 2..60 {
            let ratio = estimator_flops(&ec, n) as f64 / predictor_flops(&pc, n).total as f64;
            assert!(ratio < 0.1, "n = {n}: {ratio}");
        }
    }

    #[test]
    fn invalid_kept_count_is_rejected() {
        let pc = PredictorConfig::default();
        let ec = EstimatorConfig::default();
        assert!(pipeline_flops(&pc, &ec, 5, 6, true).is_err());
        assert!(pipeline_flops(&pc, &ec, 5, 0, true).is_err());
    }
}
