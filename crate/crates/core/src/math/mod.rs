//! Numeric substrate: dense and sparse operators, Sinkhorn normalization,
//! maximum-profit assignment and the ℓ2,1 discreteness score.

mod assignment;
mod dense;
mod hungarian;
mod score;
mod sinkhorn;
mod sparse;

pub use assignment::{AssignmentMatrix, Permutation};
pub use dense::DenseMatrix;
pub use hungarian::{assignment_profit, hungarian};
pub use score::{binary_score, l21_norm};
pub use sinkhorn::{sinkhorn, sinkhorn_with, SinkhornConfig};
pub use sparse::{spmv, AffinityPair, SparseAffinity};

/// Match index of `(i, a)` under the row-major encoding `p = i * n2 + a`.
#[inline]
pub fn match_index(i: usize, a: usize, n2: usize) -> usize {
    i * n2 + a
}
