//! JSON experiment configuration shared by the CLI commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{filter_mnist2, load_mnist_split, synth_separable, Dataset, Split};
use crate::error::{Error, Result};
use crate::perturb::PerturbationSpec;
use crate::train::{TrainConfig, WeightInit};

/// Which dataset an experiment runs on.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetConfig {
    /// MNIST restricted to digits 0 and 1, read from the four canonical
    /// IDX files in `data_dir`.
    Mnist2 { data_dir: PathBuf },
    /// Seeded synthetic two-cloud task; the test split uses `seed + 1`.
    Synth {
        n_per_class: usize,
        d: usize,
        margin: f64,
        seed: u64,
        #[serde(default)]
        test_n_per_class: Option<usize>,
    },
}

impl DatasetConfig {
    /// Loads `(train, test)` splits.
    pub fn load(&self) -> Result<(Dataset, Dataset)> {
        match self {
            DatasetConfig::Mnist2 { data_dir } => {
                let train = filter_mnist2(&load_mnist_split(data_dir, Split::Train)?)?;
                let test = filter_mnist2(&load_mnist_split(data_dir, Split::Test)?)?;
                Ok((train, test))
            }
            DatasetConfig::Synth {
                n_per_class,
                d,
                margin,
                seed,
                test_n_per_class,
            } => {
                let train = synth_separable(*n_per_class, *d, *margin, *seed)?;
                let test_n = test_n_per_class.unwrap_or(*n_per_class / 2).max(1);
                let test = synth_separable(test_n, *d, *margin, seed.wrapping_add(1))?;
                Ok((train, test))
            }
        }
    }
}

/// Scalar training hyperparameters; combined with one grid entry to form a
/// full `TrainConfig` per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainParams {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stop_tol: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub init: WeightInit,
}

fn default_lr() -> f64 {
    0.1
}
fn default_epochs() -> usize {
    500
}
fn default_record_every() -> usize {
    50
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            learning_rate: default_lr(),
            epochs: default_epochs(),
            batch_size: 0,
            seed: 0,
            stop_tol: 0.0,
            record_every: default_record_every(),
            init: WeightInit::Zeros,
        }
    }
}

impl TrainParams {
    pub fn build(&self, perturbation: PerturbationSpec) -> TrainConfig {
        TrainConfig {
            perturbation,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            stop_tol: self.stop_tol,
            record_every: self.record_every,
            init: self.init,
        }
    }
}

/// Landscape sweep settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandscapeParams {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_half_range")]
    pub half_range: f64,
    #[serde(default)]
    pub direction_seed: u64,
}

fn default_points() -> usize {
    41
}
fn default_half_range() -> f64 {
    1.0
}

impl Default for LandscapeParams {
    fn default() -> Self {
        LandscapeParams {
            points: default_points(),
            half_range: default_half_range(),
            direction_seed: 0,
        }
    }
}

/// Top-level experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    /// One perturbation spec per run, usually an epsilon grid of one kind.
    pub grids: Vec<PerturbationSpec>,
    #[serde(default)]
    pub train: TrainParams,
    pub outputs: PathBuf,
    /// Worker threads for independent grid points; 0 = all cores.
    #[serde(default)]
    pub jobs: usize,
    /// Append a constant-1 feature column (opt-in intercept; off keeps the
    /// weight-direction geometry exact).
    #[serde(default)]
    pub bias_column: bool,
    #[serde(default)]
    pub landscape: LandscapeParams,
    #[serde(default = "default_top_k")]
    pub spectrum_top_k: usize,
}

fn default_top_k() -> usize {
    3
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grids.is_empty() {
            return Err(Error::Config("grids must not be empty".into()));
        }
        for spec in &self.grids {
            spec.validate()
                .map_err(|e| Error::Config(format!("grid entry: {e}")))?;
        }
        if self.spectrum_top_k == 0 {
            return Err(Error::Config("spectrum_top_k must be >= 1".into()));
        }
        self.train.build(self.grids[0]).validate()?;
        Ok(())
    }

    /// Checkpoint file path for one grid entry.
    pub fn checkpoint_path(&self, spec: &PerturbationSpec) -> PathBuf {
        self.outputs.join(format!("ckpt_{}.json", spec.tag()))
    }

    /// Loads the dataset splits, applying the bias column when configured.
    pub fn load_dataset(&self) -> Result<(Dataset, Dataset)> {
        let (train, test) = self.dataset.load()?;
        if self.bias_column {
            Ok((train.with_bias_column(), test.with_bias_column()))
        } else {
            Ok((train, test))
        }
    }
}
