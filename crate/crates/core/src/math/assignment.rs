use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Soft correspondence between graph-1 nodes (rows) and graph-2 nodes
/// (columns). The row-major entry vector is the vectorized view `x`, so
/// entry `i * n2 + a` is the match `(i, a)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    n1: usize,
    n2: usize,
    entries: Vec<f64>,
}

impl AssignmentMatrix {
    pub fn new(n1: usize, n2: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n1 * n2 {
            return Err(Error::DimensionMismatch {
                expected: n1 * n2,
                actual: entries.len(),
            });
        }
        if let Some(v) = entries.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "assignment entries must be finite and nonnegative, found {v}"
            )));
        }
        Ok(Self { n1, n2, entries })
    }

    /// Every entry `1/n2`, the trivial initial assignment.
    pub fn uniform(n1: usize, n2: usize) -> Self {
        Self {
            n1,
            n2,
            entries: vec![1.0 / n2 as f64; n1 * n2],
        }
    }

    pub fn from_permutation(perm: &Permutation, n2: usize) -> Self {
        let n1 = perm.len();
        let mut entries = vec![0.0; n1 * n2];
        for (i, &a) in perm.mapping().iter().enumerate() {
            entries[i * n2 + a] = 1.0;
        }
        Self { n1, n2, entries }
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.entries[i * self.n2 + a]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn is_square(&self) -> bool {
        self.n1 == self.n2
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::new(self.n1, self.n2, self.entries.clone()).expect("assignment entries are finite")
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.chunks(self.n2).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n2];
        for row in self.entries.chunks(self.n2) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub(crate) fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }
}

/// Hard one-to-one assignment; `mapping[i]` is the graph-2 node matched to
/// graph-1 node `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    /// Validates injectivity; targets must lie below `n2`.
    pub fn new(mapping: Vec<usize>, n2: usize) -> Result<Self> {
        let mut seen = vec![false; n2];
        for &a in &mapping {
            if a >= n2 {
                return Err(Error::InvalidArgument(format!(
                    "permutation target {a} out of range for {n2} nodes"
                )));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::InvalidArgument(format!(
                    "permutation is not injective: {a} used twice"
                )));
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Inverse of a bijection on `0..n`.
    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &a) in self.mapping.iter().enumerate() {
            inv[a] = i;
        }
        Self { mapping: inv }
    }

    /// Indicator vector of length `n1 * n2` in match-index order.
    pub fn to_indicator(&self, n2: usize) -> Vec<f64> {
        AssignmentMatrix::from_permutation(self, n2).into_entries()
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        Self::new(mapping, n)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.mapping
    }
}
