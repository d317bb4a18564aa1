use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gmatch_core::affinity::AffinityConfig;
use gmatch_core::nn::{AdamConfig, LossConfig, PredictorConfig};
use gmatch_core::solver::{RrwmConfig, SolverConfig};

use crate::error::{BenchError, Result};

/// Offset separating test-split seeds from training-split seeds.
pub const TEST_SEED_OFFSET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Dpgm,
    Spectral,
    Ipfp,
    Rrwm,
}

impl SolverChoice {
    pub const ALL: [SolverChoice; 4] = [Self::Dpgm, Self::Spectral, Self::Ipfp, Self::Rrwm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dpgm => "dpgm",
            Self::Spectral => "spectral",
            Self::Ipfp => "ipfp",
            Self::Rrwm => "rrwm",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AffinitySource {
    #[default]
    Handcrafted,
    Learned,
}

impl AffinitySource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Handcrafted => "handcrafted",
            Self::Learned => "learned",
        }
    }
}

/// `tia` feeds a uniform initial assignment to the solver; `wps` discretizes
/// the predictor's assignment without running the solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    Tia,
    Wps,
}

impl Ablation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::Tia => "tia",
            Self::Wps => "wps",
        }
    }
}

/// Synthetic test split: `instances` pairs per noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub n: usize,
    pub noise_levels: Vec<f64>,
    pub instances: usize,
    pub seed: u64,
    pub rotation_max: f64,
    pub translation_max: f64,
    pub outliers: usize,
    /// Load pairs from a dataset file instead of generating them.
    pub path: Option<PathBuf>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n: 10,
            noise_levels: vec![0.02],
            instances: 50,
            seed: 0,
            rotation_max: std::f64::consts::FRAC_PI_8,
            translation_max: 0.1,
            outliers: 0,
            path: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSpec {
    /// Training pairs, generated at the first noise level from seeds
    /// `seed .. seed + train_instances`.
    pub train_instances: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    /// Seeds parameter init and batch order.
    pub seed: u64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            train_instances: 500,
            epochs: 20,
            batch_size: 8,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    /// Per-instance rows (CSV); stdout when absent.
    pub rows: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Read by the learned pipeline, written by training.
    pub checkpoint: Option<PathBuf>,
    /// Per-epoch training metrics (CSV).
    pub learning_curve: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub solver: SolverChoice,
    pub affinity: AffinitySource,
    pub ablation: Ablation,
    pub solver_config: SolverConfig,
    pub rrwm: RrwmConfig,
    /// Iteration cap for spectral matching and IPFP.
    pub baseline_iters: usize,
    pub handcrafted: AffinityConfig,
    pub predictor: PredictorConfig,
    pub loss: LossConfig,
    pub train: TrainSpec,
    pub output: OutputPaths,
    /// Worker threads for instance evaluation; 0 uses the global pool.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            solver: SolverChoice::default(),
            affinity: AffinitySource::default(),
            ablation: Ablation::default(),
            solver_config: SolverConfig::default(),
            rrwm: RrwmConfig::default(),
            baseline_iters: 100,
            handcrafted: AffinityConfig::default(),
            predictor: PredictorConfig::default(),
            loss: LossConfig::default(),
            train: TrainSpec::default(),
            output: OutputPaths::default(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Checks everything needed by [`crate::run_experiment`] before any work.
    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        if d.path.is_none() {
            if d.n < 3 {
                return Err(BenchError::Config(format!("dataset.n must be at least 3, got {}", d.n)));
            }
            if d.noise_levels.is_empty() {
                return Err(BenchError::Config("dataset.noise_levels is empty".into()));
            }
            if d.noise_levels.iter().any(|s| !(*s >= 0.0)) {
                return Err(BenchError::Config("noise levels must be nonnegative".into()));
            }
            let total = d.instances as u64 * d.noise_levels.len() as u64;
            if total >= TEST_SEED_OFFSET || self.train.train_instances as u64 >= TEST_SEED_OFFSET {
                return Err(BenchError::Config(
                    "instance counts overlap the seed ranges of the splits".into(),
                ));
            }
        }
        self.solver_config.validate()?;
        if self.baseline_iters == 0 || self.rrwm.max_iters == 0 {
            return Err(BenchError::Config("baseline iteration caps must be positive".into()));
        }
        self.handcrafted.validate()?;
        self.predictor.validate()?;
        if self.ablation != Ablation::Full {
            if self.affinity != AffinitySource::Learned {
                return Err(BenchError::Config(format!(
                    "ablation `{}` needs the learned affinity source",
                    self.ablation.name()
                )));
            }
            if self.solver != SolverChoice::Dpgm {
                return Err(BenchError::Config(format!(
                    "ablation `{}` applies to the dpgm solver only",
                    self.ablation.name()
                )));
            }
        }
        if self.affinity == AffinitySource::Learned && self.output.checkpoint.is_none() {
            return Err(BenchError::Config(
                "learned affinity source needs output.checkpoint".into(),
            ));
        }
        Ok(())
    }
}
