use serde::{Deserialize, Serialize};

use gmatch_core::graphs::synthesize_pair;
use gmatch_core::nn::{grad_check, EpochMetrics, Example, GradCheckReport, MlpHidden, Predictor, PredictorConfig};
use gmatch_core::nn::{train, LossConfig, TrainConfig};
use gmatch_core::solver::SolverConfig;

use crate::config::{Ablation, AffinitySource, ExperimentConfig};
use crate::dataset::train_split;
use crate::error::{BenchError, Result};
use crate::pipeline::{run_experiment_with, LearnedModel};
use crate::report::{write_file, RunReport};

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: LearnedModel,
    pub learning_curve: Vec<EpochMetrics>,
    /// Test-split evaluation under `cfg` with the learned affinity source.
    pub report: RunReport,
}

pub fn train_model(
    cfg: &ExperimentConfig,
    on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(LearnedModel, Vec<EpochMetrics>)> {
    let pairs = train_split(&cfg.dataset, &cfg.train)?;
    let train_cfg = TrainConfig {
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        optimizer: cfg.train.optimizer,
        seed: cfg.train.seed,
        solver: cfg.solver_config.clone(),
        loss: cfg.loss,
    };
    let (predictor, store, curve) = train(&pairs, &cfg.predictor, &train_cfg, on_epoch)?;
    Ok((LearnedModel { predictor, store }, curve))
}

/// Trains on the training split, writes the checkpoint and learning curve,
/// then evaluates on the disjoint test split.
pub fn train_and_eval(cfg: &ExperimentConfig, on_epoch: impl FnMut(&EpochMetrics)) -> Result<TrainOutcome> {
    let mut eval_cfg = cfg.clone();
    eval_cfg.affinity = AffinitySource::Learned;
    eval_cfg.validate()?;
    let checkpoint = eval_cfg.output.checkpoint.clone().expect("validated");
    let (model, learning_curve) = train_model(&eval_cfg, on_epoch)?;
    model.save(&checkpoint)?;
    if let Some(path) = &eval_cfg.output.learning_curve {
        write_file(path, learning_curve_csv(&learning_curve)?.as_bytes())?;
    }
    let report = run_experiment_with(&eval_cfg, Some(&model))?;
    Ok(TrainOutcome {
        model,
        learning_curve,
        report,
    })
}

pub fn learning_curve_csv(curve: &[EpochMetrics]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in curve {
        w.serialize(m)?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Mean accuracy of one trained model under each ablation.
pub fn ablation_accuracies(cfg: &ExperimentConfig, model: &LearnedModel) -> Result<Vec<(Ablation, f64)>> {
    [Ablation::Full, Ablation::Tia, Ablation::Wps]
        .into_iter()
        .map(|ablation| {
            let mut c = cfg.clone();
            c.affinity = AffinitySource::Learned;
            c.ablation = ablation;
            Ok((ablation, run_experiment_with(&c, Some(model))?.mean_accuracy()))
        })
        .collect()
}

/// Desk-scale gradient-check instance: a three-node pair, four-wide latent
/// spaces, two message-passing layers and three solver iterations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradCheckSpec {
    pub n: usize,
    pub latent_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub solver_iters: usize,
    pub loss_weight: f64,
    pub step: f64,
    pub pair_seed: u64,
    pub param_seed: u64,
}

impl Default for GradCheckSpec {
    fn default() -> Self {
        Self {
            n: 3,
            latent_dim: 4,
            hidden: 4,
            layers: 2,
            solver_iters: 3,
            loss_weight: 5.0,
            step: 1e-5,
            pair_seed: 0,
            param_seed: 0,
        }
    }
}

pub fn run_grad_check(spec: &GradCheckSpec) -> Result<GradCheckReport> {
    let pair = synthesize_pair(spec.n, 0.02, 0.3, spec.pair_seed)?;
    let ex = Example::from_pair(&pair)?;
    let cfg = PredictorConfig {
        d_v: spec.latent_dim,
        d_e: spec.latent_dim,
        layers: spec.layers,
        mlp_hidden: MlpHidden::uniform(&[spec.hidden]),
        ..Default::default()
    };
    let predictor = Predictor::new(&cfg, ex.input.node_dim())?;
    let store = predictor.init_params(spec.param_seed)?;
    let solver = SolverConfig {
        max_iters: spec.solver_iters,
        ..Default::default()
    };
    let loss = LossConfig {
        weight: spec.loss_weight,
    };
    Ok(grad_check(&predictor, &store, &ex, &solver, &loss, spec.step)?)
}
