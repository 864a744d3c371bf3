//! Minimal dense-tensor autodiff used by every learnable component.

mod gradcheck;
mod graph;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use graph::{Axis, Graph, Var, LAYER_NORM_EPS, MASK_FILL};
pub use tensor::Tensor;
