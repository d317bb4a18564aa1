use super::{DenseMatrix, Permutation};
use crate::error::{Error, Result};

/// Maximum-profit perfect assignment on a square matrix.
///
/// Shortest augmenting path with row/column potentials, O(n³). Ties are
/// broken by lowest column index, so the result is deterministic.
pub fn hungarian(profit: &DenseMatrix) -> Result<Permutation> {
    if !profit.is_square() {
        return Err(Error::NotSquare {
            rows: profit.rows(),
            cols: profit.cols(),
        });
    }
    let n = profit.rows();
    if n == 0 {
        return Ok(Permutation::identity(0));
    }
    let cost = |i: usize, j: usize| -profit.get(i, j);

    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![0; n];
    for j in 1..=n {
        mapping[owner[j] - 1] = j - 1;
    }
    Permutation::new(mapping, n)
}

/// Total profit of a permutation.
pub fn assignment_profit(profit: &DenseMatrix, perm: &Permutation) -> f64 {
    perm.mapping().iter().enumerate().map(|(i, &a)| profit.get(i, a)).sum()
}
