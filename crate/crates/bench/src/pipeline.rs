use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use gmatch_core::affinity::{assemble_affinity, objective};
use gmatch_core::graphs::{build_aa_graph, GraphPair};
use gmatch_core::math::{binary_score, AssignmentMatrix, SparseAffinity};
use gmatch_core::nn::{AaInput, ParamStore, Predictor};
use gmatch_core::solver::{accuracy, discretize, ipfp, probabilistic_solve, rrwm_with, spectral_match, SolveTrace};

use crate::config::{Ablation, AffinitySource, ExperimentConfig, SolverChoice};
use crate::dataset::{test_split, TestInstance};
use crate::error::{BenchError, Result};
use crate::report::RunReport;

/// Descriptor width produced by the synthetic generator, doubled per AA-node.
const NODE_ATTR_DIM: usize = 2 * gmatch_core::graphs::DESCRIPTOR_DIM;

/// Predictor plus trained parameters.
#[derive(Clone, Debug)]
pub struct LearnedModel {
    pub predictor: Predictor,
    pub store: ParamStore,
}

impl LearnedModel {
    pub fn load(cfg: &ExperimentConfig, path: &Path) -> Result<Self> {
        let predictor = Predictor::new(&cfg.predictor, NODE_ATTR_DIM)?;
        let mut store = predictor.init_params(0)?;
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        store.load_json(&text)?;
        Ok(Self { predictor, store })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.store.to_json()?).map_err(|e| BenchError::io(path, e))
    }
}

/// Outcome of one instance. Wall time is kept out of the delimited rows so
/// that reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub index: usize,
    pub seed: u64,
    pub noise_sigma: f64,
    pub accuracy: f64,
    /// `xᵀKx` of the discretized matching under the affinity used.
    pub objective: f64,
    /// Binary score of the solver's soft output.
    pub binary_score: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub wall_time_s: f64,
}

fn soft_matrix(x: &[f64], n1: usize, n2: usize) -> Result<AssignmentMatrix> {
    Ok(AssignmentMatrix::new(n1, n2, x.iter().map(|v| v.max(0.0)).collect())?)
}

/// Affinity and initial assignment for one pair: the handcrafted affinity
/// with a uniform start, or the predictor's outputs.
pub fn prepare(
    pair: &GraphPair,
    cfg: &ExperimentConfig,
    model: Option<&LearnedModel>,
) -> Result<(SparseAffinity, AssignmentMatrix)> {
    match cfg.affinity {
        AffinitySource::Handcrafted => Ok((
            assemble_affinity(&pair.g1, &pair.g2, &cfg.handcrafted)?,
            AssignmentMatrix::uniform(pair.g1.len(), pair.g2.len()),
        )),
        AffinitySource::Learned => {
            let m = model.ok_or_else(|| BenchError::Config("learned pipeline without a model".into()))?;
            let input = AaInput::new(&build_aa_graph(&pair.g1, &pair.g2)?);
            let (x, k) = m.predictor.predict(&m.store, &input)?;
            Ok((k, x))
        }
    }
}

/// Probabilistic solve of one pair honouring the ablation setting.
pub fn solve_dpgm(
    k: &SparseAffinity,
    x_init: AssignmentMatrix,
    cfg: &ExperimentConfig,
) -> Result<(AssignmentMatrix, Option<SolveTrace>)> {
    match cfg.ablation {
        Ablation::Wps => Ok((x_init, None)),
        Ablation::Tia => {
            let (x, trace) = probabilistic_solve(k, &AssignmentMatrix::uniform(k.n1(), k.n2()), &cfg.solver_config)?;
            Ok((x, Some(trace)))
        }
        Ablation::Full => {
            let (x, trace) = probabilistic_solve(k, &x_init, &cfg.solver_config)?;
            Ok((x, Some(trace)))
        }
    }
}

/// Runs the configured pipeline on one pair.
pub fn run_instance(pair: &GraphPair, cfg: &ExperimentConfig, model: Option<&LearnedModel>) -> Result<InstanceRowCore> {
    let start = Instant::now();
    let (n1, n2) = (pair.g1.len(), pair.g2.len());
    let (k, x_init) = prepare(pair, cfg, model)?;
    let (soft, iterations) = match cfg.solver {
        SolverChoice::Dpgm => {
            let (x, trace) = solve_dpgm(&k, x_init, cfg)?;
            (x, trace.map_or(0, |t| t.iterations()))
        }
        SolverChoice::Spectral => {
            let r = spectral_match(&k, cfg.baseline_iters)?;
            (soft_matrix(&r.x, n1, n2)?, r.iterations)
        }
        SolverChoice::Ipfp => {
            let r = ipfp(&k, AssignmentMatrix::uniform(n1, n2).entries(), cfg.baseline_iters)?;
            (soft_matrix(&r.x, n1, n2)?, r.iterations)
        }
        SolverChoice::Rrwm => {
            let r = rrwm_with(&k, &cfg.rrwm)?;
            (soft_matrix(&r.x, n1, n2)?, r.iterations)
        }
    };
    let pred = discretize(&soft)?;
    let wall = start.elapsed().as_secs_f64();
    Ok(InstanceRowCore {
        accuracy: accuracy(&pred, &pair.ground_truth)?,
        objective: objective(&k, &pred.to_indicator(n2))?,
        binary_score: binary_score(&soft)?,
        iterations,
        wall_time_s: wall,
    })
}

/// Per-instance measurements before the row is labelled with its index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceRowCore {
    pub accuracy: f64,
    pub objective: f64,
    pub binary_score: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
}

/// Evaluates `instances` in parallel, returning rows in index order.
pub fn evaluate_instances(
    instances: &[TestInstance],
    cfg: &ExperimentConfig,
    model: Option<&LearnedModel>,
) -> Result<Vec<InstanceRow>> {
    let work = || -> Result<Vec<InstanceRow>> {
        instances
            .par_iter()
            .map(|inst| {
                let core = run_instance(&inst.pair, cfg, model)?;
                Ok(InstanceRow {
                    index: inst.index,
                    seed: inst.pair.meta.seed,
                    noise_sigma: inst.pair.meta.noise_sigma,
                    accuracy: core.accuracy,
                    objective: core.objective,
                    binary_score: core.binary_score,
                    iterations: core.iterations,
                    wall_time_s: core.wall_time_s,
                })
            })
            .collect()
    };
    if cfg.workers == 0 {
        return work();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| BenchError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(work)
}

/// Generates (or loads) the test split and runs the configured pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let model = match cfg.affinity {
        AffinitySource::Learned => {
            let path = cfg.output.checkpoint.as_deref().expect("validated");
            Some(LearnedModel::load(cfg, path)?)
        }
        AffinitySource::Handcrafted => None,
    };
    run_experiment_with(cfg, model.as_ref())
}

/// [`run_experiment`] with an in-memory model instead of a checkpoint file.
pub fn run_experiment_with(cfg: &ExperimentConfig, model: Option<&LearnedModel>) -> Result<RunReport> {
    let instances = test_split(&cfg.dataset)?;
    let rows = evaluate_instances(&instances, cfg, model)?;
    Ok(RunReport::new(cfg.clone(), rows))
}
