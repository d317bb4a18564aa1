//! Matrix-valued reverse-mode differentiation tape.
//!
//! Every value is a row-major `rows × cols` block. Nodes are appended in
//! evaluation order and only reference earlier nodes, so the tape is a DAG
//! whose reverse insertion order is a valid reverse topological order.
//! Each [`Op`] variant carries its own backward rule in [`Tape::backward`];
//! the match is exhaustive, so an operation cannot be recorded without one.

use std::sync::Arc;

use super::params::{Gradients, ParamStore};

/// Row-major matrix value held by a tape node.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "tensor data does not match its shape");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn column(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::new(n, 1, data)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    AddRowBroadcast(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    ConcatCols(Var, Var),
    GatherRows(Var, Arc<[usize]>),
    ScatterAddRows(Var, Arc<[usize]>),
    Reshape(Var),
    ClampMin(Var, f64),
    DivFloor(Var, Var, f64),
    SymSpmv {
        diag: Var,
        off: Var,
        edges: Arc<[(usize, usize)]>,
        x: Var,
    },
    RowNormalize(Var),
    ColNormalize(Var),
    Sum(Var),
    BalancedBce {
        x: Var,
        target: Arc<[f64]>,
        weight: f64,
        eps: f64,
    },
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        debug_assert!(
            value.data.iter().all(|v| v.is_finite()),
            "non-finite value recorded on tape"
        );
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn shape(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows, t.cols)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Constant)
    }

    /// Records a parameter. Frozen parameters enter as constants.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Var {
        let idx = store
            .index_of(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"));
        let p = store.get_by_index(idx);
        let t = Tensor::new(p.rows, p.cols, p.value.clone());
        if p.frozen {
            self.constant(t)
        } else {
            self.push(t, Op::Param(idx))
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (r, k) = self.shape(a);
        let (k2, c) = self.shape(b);
        assert_eq!(k, k2, "matmul inner dimensions differ");
        let (av, bv) = (&self.value(a).data, &self.value(b).data);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let orow = &mut out[i * c..(i + 1) * c];
            for (kk, &x) in av[i * k..(i + 1) * k].iter().enumerate() {
                if x == 0.0 {
                    continue;
                }
                let brow = &bv[kk * c..(kk + 1) * c];
                orow.iter_mut().zip(brow).for_each(|(o, b)| *o += x * b);
            }
        }
        self.push(Tensor::new(r, c, out), Op::MatMul(a, b))
    }

    /// `a + bias` with a `1 × cols` bias added to every row.
    pub fn add_row_broadcast(&mut self, a: Var, bias: Var) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(bias), (1, c), "bias must be a single row");
        let b = self.value(bias).data.clone();
        let mut out = self.value(a).data.clone();
        for row in out.chunks_mut(c) {
            row.iter_mut().zip(&b).for_each(|(o, b)| *o += b);
        }
        self.push(Tensor::new(r, c, out), Op::AddRowBroadcast(a, bias))
    }

    fn zip_same(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(b), (r, c), "elementwise operands differ in shape");
        let out = self
            .value(a)
            .data
            .iter()
            .zip(&self.value(b).data)
            .map(|(x, y)| f(*x, *y))
            .collect();
        self.push(Tensor::new(r, c, out), op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_same(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_same(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_same(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// `a / max(b, floor)`; no gradient flows to `b` where it is clamped.
    pub fn div_floor(&mut self, a: Var, b: Var, floor: f64) -> Var {
        self.zip_same(a, b, |x, y| x / y.max(floor), Op::DivFloor(a, b, floor))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let (r, c) = self.shape(a);
        let out = self.value(a).data.iter().map(|x| f(*x)).collect();
        self.push(Tensor::new(r, c, out), op)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn clamp_min(&mut self, a: Var, floor: f64) -> Var {
        self.map(a, |x| x.max(floor), Op::ClampMin(a, floor))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let (r, ca) = self.shape(a);
        let (r2, cb) = self.shape(b);
        assert_eq!(r, r2, "concatenated blocks differ in row count");
        let (av, bv) = (&self.value(a).data, &self.value(b).data);
        let mut out = Vec::with_capacity(r * (ca + cb));
        for i in 0..r {
            out.extend_from_slice(&av[i * ca..(i + 1) * ca]);
            out.extend_from_slice(&bv[i * cb..(i + 1) * cb]);
        }
        self.push(Tensor::new(r, ca + cb, out), Op::ConcatCols(a, b))
    }

    /// Output row `k` is input row `idx[k]`.
    pub fn gather_rows(&mut self, a: Var, idx: Arc<[usize]>) -> Var {
        let (_, c) = self.shape(a);
        let av = &self.value(a).data;
        let mut out = Vec::with_capacity(idx.len() * c);
        for &i in idx.iter() {
            out.extend_from_slice(&av[i * c..(i + 1) * c]);
        }
        self.push(Tensor::new(idx.len(), c, out), Op::GatherRows(a, idx))
    }

    /// Adds input row `k` into output row `idx[k]` of an `out_rows`-row block.
    pub fn scatter_add_rows(&mut self, a: Var, idx: Arc<[usize]>, out_rows: usize) -> Var {
        let (r, c) = self.shape(a);
        assert_eq!(r, idx.len(), "one target row per input row");
        let av = &self.value(a).data;
        let mut out = vec![0.0; out_rows * c];
        for (k, &i) in idx.iter().enumerate() {
            out[i * c..(i + 1) * c]
                .iter_mut()
                .zip(&av[k * c..(k + 1) * c])
                .for_each(|(o, x)| *o += x);
        }
        self.push(Tensor::new(out_rows, c, out), Op::ScatterAddRows(a, idx))
    }

    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let data = self.value(a).data.clone();
        assert_eq!(data.len(), rows * cols, "reshape changes element count");
        self.push(Tensor::new(rows, cols, data), Op::Reshape(a))
    }

    /// `y = K x` for a symmetric operator given by its diagonal (`N × 1`),
    /// one value per undirected edge (`E × 1`) and the edge list.
    pub fn sym_spmv(&mut self, diag: Var, off: Var, edges: Arc<[(usize, usize)]>, x: Var) -> Var {
        let n = self.value(diag).len();
        assert_eq!(self.value(x).len(), n, "operand length differs from operator size");
        assert_eq!(self.value(off).len(), edges.len(), "one value per edge");
        let (d, v, xv) = (&self.value(diag).data, &self.value(off).data, &self.value(x).data);
        let mut y: Vec<f64> = d.iter().zip(xv).map(|(a, b)| a * b).collect();
        for (&(p, q), &w) in edges.iter().zip(v) {
            y[p] += w * xv[q];
            y[q] += w * xv[p];
        }
        self.push(Tensor::column(y), Op::SymSpmv { diag, off, edges, x })
    }

    pub fn row_normalize(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let mut out = self.value(a).data.clone();
        for row in out.chunks_mut(c) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        self.push(Tensor::new(r, c, out), Op::RowNormalize(a))
    }

    pub fn col_normalize(&mut self, a: Var) -> Var {
        let (r, c) = self.shape(a);
        let mut out = self.value(a).data.clone();
        let sums = col_sums(&out, c);
        for row in out.chunks_mut(c) {
            row.iter_mut().zip(&sums).for_each(|(v, s)| *v /= s);
        }
        self.push(Tensor::new(r, c, out), Op::ColNormalize(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Tensor::new(1, 1, vec![s]), Op::Sum(a))
    }

    /// Weighted binary cross-entropy
    /// `−Σ [w·t·log x + (1−w)·(1−t)·log(1−x)]` with `x` clamped to `[eps, 1−eps]`.
    pub fn balanced_bce(&mut self, x: Var, target: Arc<[f64]>, weight: f64, eps: f64) -> Var {
        assert_eq!(self.value(x).len(), target.len(), "one target per prediction");
        let loss = bce_value(&self.value(x).data, &target, weight, eps);
        self.push(
            Tensor::new(1, 1, vec![loss]),
            Op::BalancedBce { x, target, weight, eps },
        )
    }

    /// Reverse sweep from a scalar output; returns gradients of every
    /// trainable parameter recorded on the tape.
    pub fn backward(&self, output: Var, store: &ParamStore) -> Gradients {
        assert_eq!(self.value(output).len(), 1, "backward needs a scalar output");
        let mut grads = store.zero_gradients();
        let mut adj: Vec<Option<Tensor>> = vec![None; output.0 + 1];
        adj[output.0] = Some(Tensor::new(1, 1, vec![1.0]));

        for id in (0..=output.0).rev() {
            let Some(g) = adj[id].take() else { continue };
            let node = &self.nodes[id];
            let mut send = |v: Var, t: Tensor| match &mut adj[v.0] {
                Some(acc) => acc.add_assign(&t),
                slot @ None => *slot = Some(t),
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(idx) => grads.accumulate(*idx, &g.data),
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let (r, k, c) = (av.rows, av.cols, bv.cols);
                    let mut da = vec![0.0; r * k];
                    for i in 0..r {
                        let grow = &g.data[i * c..(i + 1) * c];
                        for kk in 0..k {
                            let brow = &bv.data[kk * c..(kk + 1) * c];
                            da[i * k + kk] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                        }
                    }
                    let mut db = vec![0.0; k * c];
                    for i in 0..r {
                        let grow = &g.data[i * c..(i + 1) * c];
                        for kk in 0..k {
                            let x = av.data[i * k + kk];
                            if x == 0.0 {
                                continue;
                            }
                            db[kk * c..(kk + 1) * c]
                                .iter_mut()
                                .zip(grow)
                                .for_each(|(d, gg)| *d += x * gg);
                        }
                    }
                    send(*a, Tensor::new(r, k, da));
                    send(*b, Tensor::new(k, c, db));
                }
                Op::AddRowBroadcast(a, bias) => {
                    let c = g.cols;
                    let db = col_sums(&g.data, c);
                    send(*bias, Tensor::new(1, c, db));
                    send(*a, g);
                }
                Op::Add(a, b) => {
                    send(*b, g.clone());
                    send(*a, g);
                }
                Op::Sub(a, b) => {
                    let neg = Tensor::new(g.rows, g.cols, g.data.iter().map(|v| -v).collect());
                    send(*b, neg);
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (&self.value(*a).data, &self.value(*b).data);
                    let da = g.data.iter().zip(bv).map(|(x, y)| x * y).collect();
                    let db = g.data.iter().zip(av).map(|(x, y)| x * y).collect();
                    send(*a, Tensor::new(g.rows, g.cols, da));
                    send(*b, Tensor::new(g.rows, g.cols, db));
                }
                Op::DivFloor(a, b, floor) => {
                    let (av, bv) = (&self.value(*a).data, &self.value(*b).data);
                    let da = g.data.iter().zip(bv).map(|(x, y)| x / y.max(*floor)).collect();
                    let db = g
                        .data
                        .iter()
                        .zip(av.iter().zip(bv))
                        .map(|(x, (u, v))| if *v > *floor { -x * u / (v * v) } else { 0.0 })
                        .collect();
                    send(*a, Tensor::new(g.rows, g.cols, da));
                    send(*b, Tensor::new(g.rows, g.cols, db));
                }
                Op::Scale(a, s) => {
                    let d = g.data.iter().map(|x| x * s).collect();
                    send(*a, Tensor::new(g.rows, g.cols, d));
                }
                Op::Relu(a) => {
                    let av = &self.value(*a).data;
                    let d = g
                        .data
                        .iter()
                        .zip(av)
                        .map(|(x, v)| if *v > 0.0 { *x } else { 0.0 })
                        .collect();
                    send(*a, Tensor::new(g.rows, g.cols, d));
                }
                Op::Sigmoid(a) => {
                    let y = &node.value.data;
                    let d = g.data.iter().zip(y).map(|(x, s)| x * s * (1.0 - s)).collect();
                    send(*a, Tensor::new(g.rows, g.cols, d));
                }
                Op::ClampMin(a, floor) => {
                    let av = &self.value(*a).data;
                    let d = g
                        .data
                        .iter()
                        .zip(av)
                        .map(|(x, v)| if *v >= *floor { *x } else { 0.0 })
                        .collect();
                    send(*a, Tensor::new(g.rows, g.cols, d));
                }
                Op::ConcatCols(a, b) => {
                    let (ca, cb) = (self.value(*a).cols, self.value(*b).cols);
                    let mut da = Vec::with_capacity(g.rows * ca);
                    let mut db = Vec::with_capacity(g.rows * cb);
                    for row in g.data.chunks(ca + cb) {
                        da.extend_from_slice(&row[..ca]);
                        db.extend_from_slice(&row[ca..]);
                    }
                    send(*a, Tensor::new(g.rows, ca, da));
                    send(*b, Tensor::new(g.rows, cb, db));
                }
                Op::GatherRows(a, idx) => {
                    let (r, c) = self.shape(*a);
                    let mut d = vec![0.0; r * c];
                    for (k, &i) in idx.iter().enumerate() {
                        d[i * c..(i + 1) * c]
                            .iter_mut()
                            .zip(&g.data[k * c..(k + 1) * c])
                            .for_each(|(o, x)| *o += x);
                    }
                    send(*a, Tensor::new(r, c, d));
                }
                Op::ScatterAddRows(a, idx) => {
                    let c = g.cols;
                    let mut d = Vec::with_capacity(idx.len() * c);
                    for &i in idx.iter() {
                        d.extend_from_slice(&g.data[i * c..(i + 1) * c]);
                    }
                    send(*a, Tensor::new(idx.len(), c, d));
                }
                Op::Reshape(a) => {
                    let (r, c) = self.shape(*a);
                    send(*a, Tensor::new(r, c, g.data));
                }
                Op::SymSpmv { diag, off, edges, x } => {
                    let (dv, vv, xv) = (&self.value(*diag).data, &self.value(*off).data, &self.value(*x).data);
                    let gy = &g.data;
                    let ddiag: Vec<f64> = gy.iter().zip(xv).map(|(a, b)| a * b).collect();
                    let mut dx: Vec<f64> = gy.iter().zip(dv).map(|(a, b)| a * b).collect();
                    let mut doff = Vec::with_capacity(edges.len());
                    for (&(p, q), &w) in edges.iter().zip(vv) {
                        doff.push(gy[p] * xv[q] + gy[q] * xv[p]);
                        dx[q] += w * gy[p];
                        dx[p] += w * gy[q];
                    }
                    send(*diag, Tensor::column(ddiag));
                    send(*off, Tensor::column(doff));
                    send(*x, Tensor::column(dx));
                }
                Op::RowNormalize(a) => {
                    let c = g.cols;
                    let av = &self.value(*a).data;
                    let y = &node.value.data;
                    let mut d = vec![0.0; g.data.len()];
                    for i in 0..g.rows {
                        let s: f64 = av[i * c..(i + 1) * c].iter().sum();
                        let gy: f64 = (0..c).map(|j| g.data[i * c + j] * y[i * c + j]).sum();
                        for j in 0..c {
                            d[i * c + j] = (g.data[i * c + j] - gy) / s;
                        }
                    }
                    send(*a, Tensor::new(g.rows, c, d));
                }
                Op::ColNormalize(a) => {
                    let c = g.cols;
                    let av = &self.value(*a).data;
                    let y = &node.value.data;
                    let sums = col_sums(av, c);
                    let mut gy = vec![0.0; c];
                    for i in 0..g.rows {
                        for j in 0..c {
                            gy[j] += g.data[i * c + j] * y[i * c + j];
                        }
                    }
                    let mut d = vec![0.0; g.data.len()];
                    for i in 0..g.rows {
                        for j in 0..c {
                            d[i * c + j] = (g.data[i * c + j] - gy[j]) / sums[j];
                        }
                    }
                    send(*a, Tensor::new(g.rows, c, d));
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    send(*a, Tensor::new(r, c, vec![g.data[0]; r * c]));
                }
                Op::BalancedBce { x, target, weight, eps } => {
                    let xv = self.value(*x);
                    let d = xv
                        .data
                        .iter()
                        .zip(target.iter())
                        .map(|(&v, &t)| {
                            if v < *eps || v > 1.0 - *eps {
                                return 0.0;
                            }
                            let dl = -(weight * t / v) + (1.0 - weight) * (1.0 - t) / (1.0 - v);
                            g.data[0] * dl
                        })
                        .collect();
                    send(*x, Tensor::new(xv.rows, xv.cols, d));
                }
            }
        }
        grads
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn col_sums(data: &[f64], cols: usize) -> Vec<f64> {
    let mut sums = vec![0.0; cols];
    for row in data.chunks(cols) {
        sums.iter_mut().zip(row).for_each(|(s, v)| *s += v);
    }
    sums
}

pub(crate) fn bce_value(x: &[f64], target: &[f64], weight: f64, eps: f64) -> f64 {
    -x.iter()
        .zip(target)
        .map(|(&v, &t)| {
            let v = v.clamp(eps, 1.0 - eps);
            weight * t * v.ln() + (1.0 - weight) * (1.0 - t) * (1.0 - v).ln()
        })
        .sum::<f64>()
}
