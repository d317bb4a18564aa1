use super::DenseMatrix;
use crate::error::{Error, Result};

/// One off-diagonal entry `K[p][q]` of the affinity operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffinityPair {
    pub p: usize,
    pub q: usize,
    pub value: f64,
}

/// Affinity operator `K` over candidate matches, `N = n1 * n2`.
///
/// The diagonal holds unary similarities; off-diagonal entries are stored
/// in both directions and sorted by `(p, q)`, which gives CSR row ranges
/// for free. Match `(i, a)` has index `p = i * n2 + a`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseAffinity {
    n1: usize,
    n2: usize,
    unary: Vec<f64>,
    pairs: Vec<AffinityPair>,
    row_ptr: Vec<usize>,
}

impl SparseAffinity {
    /// Validates nonnegativity, index range, `p != q`, uniqueness and
    /// symmetry of the stored pairs.
    pub fn new(n1: usize, n2: usize, unary: Vec<f64>, mut pairs: Vec<AffinityPair>) -> Result<Self> {
        let n = n1 * n2;
        if unary.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: unary.len(),
            });
        }
        if let Some(v) = unary.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidAffinity(format!(
                "unary entry {v} is not a finite nonnegative value"
            )));
        }
        for pr in &pairs {
            if pr.p >= n || pr.q >= n {
                return Err(Error::InvalidAffinity(format!(
                    "pair ({}, {}) out of range for N = {n}",
                    pr.p, pr.q
                )));
            }
            if pr.p == pr.q {
                return Err(Error::InvalidAffinity(format!(
                    "pair ({0}, {0}) lies on the diagonal",
                    pr.p
                )));
            }
            if !(pr.value.is_finite() && pr.value >= 0.0) {
                return Err(Error::InvalidAffinity(format!(
                    "pair ({}, {}) has value {}",
                    pr.p, pr.q, pr.value
                )));
            }
        }
        pairs.sort_by_key(|pr| (pr.p, pr.q));
        if let Some(w) = pairs.windows(2).find(|w| (w[0].p, w[0].q) == (w[1].p, w[1].q)) {
            return Err(Error::InvalidAffinity(format!(
                "duplicate pair ({}, {})",
                w[0].p, w[0].q
            )));
        }
        let row_ptr = build_row_ptr(n, &pairs);
        let k = Self {
            n1,
            n2,
            unary,
            pairs,
            row_ptr,
        };
        for pr in &k.pairs {
            match k.lookup(pr.q, pr.p) {
                Some(v) if v == pr.value => {}
                _ => {
                    return Err(Error::InvalidAffinity(format!(
                        "pair ({}, {}) has no symmetric counterpart",
                        pr.p, pr.q
                    )))
                }
            }
        }
        Ok(k)
    }

    /// Builds the operator from undirected entries, writing each to both
    /// `(p, q)` and `(q, p)`.
    pub fn from_undirected(
        n1: usize,
        n2: usize,
        unary: Vec<f64>,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut pairs = Vec::new();
        for (p, q, value) in entries {
            pairs.push(AffinityPair { p, q, value });
            pairs.push(AffinityPair { p: q, q: p, value });
        }
        Self::new(n1, n2, unary, pairs)
    }

    /// Purely diagonal operator.
    pub fn diagonal(n1: usize, n2: usize, unary: Vec<f64>) -> Result<Self> {
        Self::new(n1, n2, unary, Vec::new())
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Operator dimension `N = n1 * n2`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.unary.len()
    }

    pub fn unary(&self) -> &[f64] {
        &self.unary
    }

    pub fn pairs(&self) -> &[AffinityPair] {
        &self.pairs
    }

    /// Off-diagonal entries of row `p`.
    pub fn row(&self, p: usize) -> &[AffinityPair] {
        &self.pairs[self.row_ptr[p]..self.row_ptr[p + 1]]
    }

    pub fn lookup(&self, p: usize, q: usize) -> Option<f64> {
        if p == q {
            return self.unary.get(p).copied();
        }
        let row = self.row(p);
        row.binary_search_by_key(&q, |pr| pr.q).ok().map(|k| row[k].value)
    }

    /// True when every entry, diagonal included, is zero.
    pub fn is_zero(&self) -> bool {
        self.unary.iter().all(|&v| v == 0.0) && self.pairs.iter().all(|pr| pr.value == 0.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        for (p, &u) in self.unary.iter().enumerate() {
            m.set(p, p, u);
        }
        for pr in &self.pairs {
            m.set(pr.p, pr.q, pr.value);
        }
        m
    }

    /// `y = K x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self.spmv_unchecked(x))
    }

    pub(crate) fn spmv_unchecked(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|p| {
                let off: f64 = self.row(p).iter().map(|pr| pr.value * x[pr.q]).sum();
                self.unary[p] * x[p] + off
            })
            .collect()
    }
}

fn build_row_ptr(n: usize, sorted: &[AffinityPair]) -> Vec<usize> {
    let mut row_ptr = vec![0; n + 1];
    for pr in sorted {
        row_ptr[pr.p + 1] += 1;
    }
    for p in 0..n {
        row_ptr[p + 1] += row_ptr[p];
    }
    row_ptr
}

/// `y = K x` for a sparse affinity operator.
pub fn spmv(k: &SparseAffinity, x: &[f64]) -> Result<Vec<f64>> {
    k.spmv(x)
}
