use super::{AssignmentMatrix, DenseMatrix};
use crate::error::{Error, Result};

/// Sum over columns of each column's Euclidean norm.
pub fn l21_norm(x: &DenseMatrix) -> f64 {
    let mut sq = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (s, v) in sq.iter_mut().zip(x.row(i)) {
            *s += v * v;
        }
    }
    sq.iter().map(|s| s.sqrt()).sum()
}

/// Discreteness of a square soft assignment: `(‖X‖₂,₁ + ‖Xᵀ‖₂,₁) / 2n`.
///
/// Equals one exactly on permutation matrices and `1/√n` on the uniform
/// doubly stochastic matrix.
pub fn binary_score(x: &AssignmentMatrix) -> Result<f64> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.n1(),
            cols: x.n2(),
        });
    }
    let n = x.n1();
    let dense = x.to_dense();
    Ok((l21_norm(&dense) + l21_norm(&dense.transpose())) / (2.0 * n as f64))
}
