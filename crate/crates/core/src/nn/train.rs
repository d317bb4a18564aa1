use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{AaInput, LossConfig, Predictor, PredictorConfig, LOSS_EPS};
use super::params::{Gradients, ParamStore};
use super::solve::{solve_on_tape, TapeOperator};
use super::tape::Tape;
use crate::error::{Error, Result};
use crate::graphs::{build_aa_graph, GraphPair};
use crate::math::Permutation;
use crate::solver::{accuracy, discretize_vector, SolverConfig};

/// One supervised instance: the AA-graph input and its 0/1 target.
#[derive(Clone, Debug)]
pub struct Example {
    pub input: AaInput,
    pub target: Arc<[f64]>,
    pub ground_truth: Permutation,
}

impl Example {
    pub fn from_pair(pair: &GraphPair) -> Result<Self> {
        let aa = build_aa_graph(&pair.g1, &pair.g2)?;
        let n2 = pair.g2.len();
        Ok(Self {
            input: AaInput::new(&aa),
            target: pair.ground_truth.to_indicator(n2).into(),
            ground_truth: pair.ground_truth.clone(),
        })
    }
}

/// Loss, solver output and (optionally) parameter gradients for one example.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub loss: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub grads: Option<Gradients>,
}

/// Predictor, then the solver from `X_init`, then the balanced loss.
pub fn evaluate_example(
    predictor: &Predictor,
    store: &ParamStore,
    ex: &Example,
    solver: &SolverConfig,
    loss: &LossConfig,
    with_grad: bool,
) -> Result<Evaluation> {
    let mut tape = Tape::new();
    let decoded = predictor.forward(&mut tape, store, &ex.input)?;
    let op = TapeOperator {
        diag: decoded.x,
        off: decoded.off,
        edges: ex.input.edges.clone(),
        n1: ex.input.n1,
        n2: ex.input.n2,
    };
    let solved = solve_on_tape(&mut tape, &op, decoded.x, solver);
    let l = tape.balanced_bce(solved.x, ex.target.clone(), loss.weight, LOSS_EPS);
    Ok(Evaluation {
        loss: tape.value(l).data[0],
        x: tape.value(solved.x).data.clone(),
        iterations: solved.iterations,
        grads: with_grad.then(|| tape.backward(l, store)),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive-moment optimizer state, one moment pair per parameter slot.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.params().iter().map(|p| vec![0.0; p.value.len()]).collect();
        Self {
            cfg,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies one update. Frozen parameters are left untouched.
    pub fn update(&mut self, store: &mut ParamStore, grads: &Gradients) {
        self.step += 1;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step);
        let bc2 = 1.0 - c.beta2.powi(self.step);
        for (i, p) in store.params_mut().iter_mut().enumerate() {
            if p.frozen {
                continue;
            }
            let (m, v, g) = (&mut self.m[i], &mut self.v[i], grads.slot(i));
            for j in 0..p.value.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p.value[j] -= c.learning_rate * mh / (vh.sqrt() + c.epsilon);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    /// Seeds parameter init and the per-epoch shuffle.
    pub seed: u64,
    pub solver: SolverConfig,
    pub loss: LossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 8,
            optimizer: AdamConfig::default(),
            seed: 0,
            solver: SolverConfig::default(),
            loss: LossConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Accuracy of the solver output during the epoch's forward passes.
    pub train_accuracy: f64,
    pub mean_iterations: f64,
}

/// Mini-batch training of `store` in place.
///
/// Batch members are evaluated in parallel; their gradients are summed in
/// batch order, so the result does not depend on the thread count.
pub fn train_in_place(
    predictor: &Predictor,
    store: &mut ParamStore,
    examples: &[Example],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<Vec<EpochMetrics>> {
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if examples.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    cfg.solver.validate()?;
    let mut adam = Adam::new(cfg.optimizer, store);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut acc_sum, mut iter_sum) = (0.0, 0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let snapshot: &ParamStore = store;
            let evals: Vec<Result<(Evaluation, f64)>> = batch
                .par_iter()
                .map(|&i| {
                    let ex = &examples[i];
                    let ev = evaluate_example(predictor, snapshot, ex, &cfg.solver, &cfg.loss, true)?;
                    let pred = discretize_vector(&ev.x, ex.input.n1, ex.input.n2)?;
                    let acc = accuracy(&pred, &ex.ground_truth)?;
                    Ok((ev, acc))
                })
                .collect();
            let mut total = store.zero_gradients();
            for r in evals {
                let (ev, acc) = r?;
                loss_sum += ev.loss;
                acc_sum += acc;
                iter_sum += ev.iterations;
                total.add_assign(ev.grads.as_ref().expect("gradients requested"));
            }
            total.scale(1.0 / batch.len() as f64);
            adam.update(store, &total);
        }
        let m = examples.len() as f64;
        let metrics = EpochMetrics {
            epoch,
            mean_loss: loss_sum / m,
            train_accuracy: acc_sum / m,
            mean_iterations: iter_sum as f64 / m,
        };
        on_epoch(&metrics);
        history.push(metrics);
    }
    Ok(history)
}

/// Fresh predictor trained on `pairs`; deterministic given `cfg.seed`.
pub fn train(
    pairs: &[GraphPair],
    predictor_cfg: &PredictorConfig,
    cfg: &TrainConfig,
    on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(Predictor, ParamStore, Vec<EpochMetrics>)> {
    let examples = pairs.iter().map(Example::from_pair).collect::<Result<Vec<_>>>()?;
    let node_in = examples
        .first()
        .map(|e| e.input.node_dim())
        .ok_or_else(|| Error::InvalidArgument("training set is empty".into()))?;
    let predictor = Predictor::new(predictor_cfg, node_in)?;
    let mut store = predictor.init_params(cfg.seed)?;
    let history = train_in_place(&predictor, &mut store, &examples, cfg, on_epoch)?;
    Ok((predictor, store, history))
}
