//! Experiment runner for `gmatch-core`: synthetic splits, per-instance
//! pipelines (solver × affinity source × ablation), reports, solver
//! comparison tables and the training wrapper behind the `gmatch` CLI.

pub mod compare;
pub mod config;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod training;

pub use compare::{compare_solvers, ComparisonRow, ComparisonTable};
pub use config::{Ablation, AffinitySource, DatasetSpec, ExperimentConfig, OutputPaths, SolverChoice, TrainSpec};
pub use dataset::{test_split, train_split, TestInstance};
pub use error::{BenchError, Result};
pub use pipeline::{run_experiment, run_experiment_with, run_instance, InstanceRow, LearnedModel};
pub use report::{read_rows, Aggregates, RunReport, Stat, CODE_VERSION};
pub use training::{ablation_accuracies, run_grad_check, train_and_eval, train_model, GradCheckSpec, TrainOutcome};
