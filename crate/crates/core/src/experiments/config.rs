//! Declarative experiment configuration (TOML) with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::predictor::PredictorConfig;
use crate::scene::{GenConfig, WindowConfig};
use crate::selection::GumbelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Tp,
    Ie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    /// Plain gradient descent.
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub phase: Phase,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_grad_norm: f64,
    pub seed: u64,
    /// Weight of the variance term (estimator phase only).
    pub alpha: f64,
    pub gumbel: GumbelConfig,
    /// Rotate each training scene by a random angle every epoch.
    pub rotate: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            phase: Phase::Tp,
            optimizer: Optimizer::Sgd,
            epochs: 20,
            batch_size: 16,
            learning_rate: 1e-3,
            max_grad_norm: 1.0,
            seed: 0,
            alpha: 1.0,
            gumbel: GumbelConfig::default(),
            rotate: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err(Error::Config(
                "learning_rate and max_grad_norm must be positive".into(),
            ));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            )));
        }
        self.gumbel.validate()
    }
}

/// Where scenes come from: a file when `path` is set, otherwise the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSource {
    pub path: Option<PathBuf>,
    pub synthetic: GenConfig,
}

impl Default for DataSource {
    fn default() -> Self {
        Self {
            path: None,
            synthetic: GenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_min: 2, n_max: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub window: WindowConfig,
    pub train_data: DataSource,
    pub test_data: DataSource,
    pub predictor: PredictorConfig,
    pub estimator: EstimatorConfig,
    pub train_tp: TrainConfig,
    pub train_ie: TrainConfig,
    /// Inference-time selection (threshold, optional top-k floor).
    pub selection: GumbelConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut train_data = DataSource::default();
        train_data.synthetic.n_scenes = 300;
        train_data.synthetic.id_prefix = "train-".into();
        let mut test_data = DataSource::default();
        test_data.synthetic.n_scenes = 100;
        test_data.synthetic.n_min = 8;
        test_data.synthetic.id_prefix = "test-".into();
        Self {
            seed: 0,
            out: PathBuf::from("runs"),
            window: WindowConfig::default(),
            train_data,
            test_data,
            predictor: PredictorConfig::default(),
            estimator: EstimatorConfig::default(),
            train_tp: TrainConfig::default(),
            train_ie: TrainConfig {
                phase: Phase::Ie,
                ..TrainConfig::default()
            },
            selection: GumbelConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

/// Values given on the command line; each replaces its config entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub alpha: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.threshold {
            self.selection.threshold = t;
        }
        if let Some(a) = o.alpha {
            self.train_ie.alpha = a;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.predictor.clone().with_window(&self.window).validate()?;
        self.estimator.validate()?;
        if self.estimator.d_in != self.predictor.d_model {
            return Err(Error::Config(format!(
                "estimator d_in {} must equal predictor d_model {}",
                self.estimator.d_in, self.predictor.d_model
            )));
        }
        self.train_tp.validate()?;
        self.train_ie.validate()?;
        self.selection.validate()?;
        if !self.selection.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        if self.sweep.n_min < 1 || self.sweep.n_min > self.sweep.n_max {
            return Err(Error::Config(
                "sweep range must satisfy 1 <= n_min <= n_max".into(),
            ));
        }
        Ok(())
    }

    /// Predictor config with the shared window applied.
    pub fn predictor_config(&self) -> PredictorConfig {
        self.predictor.clone().with_window(&self.window)
    }

    /// Training schedule for a phase, seeded from the experiment seed.
    pub fn train_config(&self, phase: Phase) -> TrainConfig {
        let (base, tag) = match phase {
            Phase::Tp => (&self.train_tp, 3),
            Phase::Ie => (&self.train_ie, 4),
        };
        TrainConfig {
            phase,
            seed: derive_seed(self.seed, tag, base.seed),
            ..base.clone()
        }
    }

    pub fn generator(&self, test: bool) -> GenConfig {
        let src = if test { &self.test_data } else { &self.train_data };
        GenConfig {
            window: self.window,
            ..src.synthetic.clone()
        }
    }

    pub fn data_seed(&self, test: bool) -> u64 {
        derive_seed(self.seed, if test { 2 } else { 1 }, 0)
    }

    pub fn init_seed(&self, phase: Phase) -> u64 {
        derive_seed(self.seed, if phase == Phase::Tp { 5 } else { 6 }, 0)
    }
}

/// SplitMix64 mixing of a base seed with two stream indices.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
