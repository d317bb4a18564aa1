//! Reverse-mode differentiation and the learned AA-graph predictor,
//! trained end-to-end through the probabilistic solver.

mod gradcheck;
mod model;
mod params;
mod solve;
mod tape;
mod train;

pub use gradcheck::{finite_difference_check, grad_check, grad_check_with, GradCheckReport};
pub use model::{
    balanced_ce_loss, predictor_forward, AaInput, Aggregation, Decoded, LatentState, LossConfig, Mlp, MlpHidden,
    Predictor, PredictorConfig, LOSS_EPS,
};
pub use params::{Gradients, Param, ParamStore, CHECKPOINT_VERSION};
pub use solve::{sinkhorn_on_tape, solve_on_tape, TapeOperator, TapeSolve};
pub use tape::{sigmoid, Tape, Tensor, Var};
pub use train::{
    evaluate_example, train, train_in_place, Adam, AdamConfig, EpochMetrics, Evaluation, Example, TrainConfig,
};
