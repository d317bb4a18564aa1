//! QAP solvers over a [`SparseAffinity`](crate::math::SparseAffinity):
//! the iterative probabilistic solver, classical baselines, and the
//! discretization used to score them.

mod baselines;
mod probabilistic;

pub use baselines::{ipfp, rrwm, rrwm_with, spectral_match, Relaxation, RrwmConfig};
pub use probabilistic::{probabilistic_solve, SolveTrace, SolverConfig, StopReason};

use crate::error::{Error, Result};
use crate::math::{hungarian, AssignmentMatrix, DenseMatrix, Permutation};

/// Hard assignment maximizing total soft mass.
pub fn discretize(x: &AssignmentMatrix) -> Result<Permutation> {
    hungarian(&x.to_dense())
}

/// [`discretize`] for a vectorized assignment in match-index order.
pub fn discretize_vector(x: &[f64], n1: usize, n2: usize) -> Result<Permutation> {
    hungarian(&DenseMatrix::new(n1, n2, x.to_vec())?)
}

/// Fraction of graph-1 nodes whose predicted partner is correct.
pub fn accuracy(pred: &Permutation, gt: &Permutation) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            expected: gt.len(),
            actual: pred.len(),
        });
    }
    if gt.is_empty() {
        return Ok(1.0);
    }
    let hits = pred.mapping().iter().zip(gt.mapping()).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / gt.len() as f64)
}
