//! Trajectory prediction with learned neighbour importance.
//!
//! A transformer predictor forecasts the primary person's future path from
//! the observed tracks of everyone in the scene. A small importance
//! estimator scores each neighbour so that low-importance people can be
//! dropped before the expensive social encoder runs.

pub mod autodiff;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod flops;
pub mod losses;
pub mod nn;
pub mod params;
pub mod predictor;
pub mod scene;
pub mod selection;

pub use error::{Error, Result};
