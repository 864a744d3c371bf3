//! Central finite-difference gradient checks.

use crate::autodiff::graph::{Graph, Var};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};

/// Result of comparing analytic and numeric gradients.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Worst relative error per leaf, in leaf order.
    pub max_rel_error: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn worst(&self) -> f64 {
        self.max_rel_error.iter().cloned().fold(0.0, f64::max)
    }
}

/// Relative error with an absolute floor so near-zero gradients compare on
/// an absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Checks `builder`'s gradients with respect to every tensor in `leaves`.
///
/// The builder receives a fresh graph and one `Var` per leaf and must return
/// a scalar loss. Each leaf element is perturbed by `+-step`.
pub fn grad_check<F>(builder: F, leaves: &[Tensor], step: f64, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.constant(t.clone())).collect();
        let loss = builder(&mut g, &vars)?;
        Ok(g.value(loss).item())
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = leaves.iter().map(|t| g.param(t.clone())).collect();
    let loss = builder(&mut g, &vars)?;
    if g.value(loss).numel() != 1 {
        return Err(Error::Contract("grad_check builder must return a scalar".into()));
    }
    g.backward(loss)?;

    let mut work: Vec<Tensor> = leaves.to_vec();
    let mut max_rel_error = Vec::with_capacity(leaves.len());
    for (li, &v) in vars.iter().enumerate() {
        let analytic = g.grad(v);
        let mut worst: f64 = 0.0;
        for e in 0..leaves[li].numel() {
            let orig = leaves[li].data()[e];
            work[li].data_mut()[e] = orig + step;
            let up = eval(&work)?;
            work[li].data_mut()[e] = orig - step;
            let down = eval(&work)?;
            work[li].data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * step);
            worst = worst.max(relative_error(analytic[e], numeric));
        }
        max_rel_error.push(worst);
    }
    let passed = max_rel_error.iter().all(|&e| e < tolerance);
    Ok(GradCheckReport {
        max_rel_error,
        tolerance,
        passed,
    })
}
