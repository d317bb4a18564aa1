use super::AssignmentMatrix;
use crate::error::{Error, Result};

/// Inner-loop settings for Sinkhorn normalization.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SinkhornConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Lower clamp applied to every entry before the first pass.
    pub floor: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            max_iters: 20,
            tol: 1e-9,
            floor: 1e-12,
        }
    }
}

/// Alternating row/column normalization of a square nonnegative matrix.
///
/// Entries are clamped to at least `floor`, then each sweep normalizes rows
/// and then columns. Iteration stops once the largest row-sum deviation
/// from one (columns are exact after the column pass) drops below `tol`, or
/// after `max_iters` sweeps.
pub fn sinkhorn(x: &AssignmentMatrix, max_iters: usize, tol: f64, floor: f64) -> Result<AssignmentMatrix> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.n1(),
            cols: x.n2(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sinkhorn tolerance must be positive, got {tol}"
        )));
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sinkhorn floor must be positive, got {floor}"
        )));
    }
    let mut out = x.clone();
    let n = out.n2();
    let m = out.entries_mut();
    for v in m.iter_mut() {
        *v = v.max(floor);
    }
    for _ in 0..max_iters {
        normalize_rows(m, n);
        normalize_cols(m, n);
        if max_row_deviation(m, n) < tol {
            break;
        }
    }
    Ok(out)
}

/// [`sinkhorn`] with settings bundled in a [`SinkhornConfig`].
pub fn sinkhorn_with(x: &AssignmentMatrix, cfg: &SinkhornConfig) -> Result<AssignmentMatrix> {
    sinkhorn(x, cfg.max_iters, cfg.tol, cfg.floor)
}

fn normalize_rows(m: &mut [f64], n: usize) {
    for row in m.chunks_mut(n) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
}

fn normalize_cols(m: &mut [f64], n: usize) {
    let mut sums = vec![0.0; n];
    for row in m.chunks(n) {
        sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    for row in m.chunks_mut(n) {
        row.iter_mut().zip(&sums).for_each(|(v, s)| *v /= s);
    }
}

fn max_row_deviation(m: &[f64], n: usize) -> f64 {
    m.chunks(n)
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}
