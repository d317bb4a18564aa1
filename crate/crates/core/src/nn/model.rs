use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tape::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graphs::{AaGraph, EDGE_ATTR_DIM};
use crate::math::{AssignmentMatrix, SparseAffinity};

/// Hidden widths of each MLP block; an empty list is a single affine map.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHidden {
    pub rho_v: Vec<usize>,
    pub rho_e: Vec<usize>,
    pub tau: Vec<usize>,
    pub kappa: Vec<usize>,
    pub phi_n: Vec<usize>,
    pub phi_e: Vec<usize>,
}

impl MlpHidden {
    pub fn uniform(widths: &[usize]) -> Self {
        Self {
            rho_v: widths.to_vec(),
            rho_e: widths.to_vec(),
            tau: widths.to_vec(),
            kappa: widths.to_vec(),
            phi_n: widths.to_vec(),
            phi_e: widths.to_vec(),
        }
    }
}

impl Default for MlpHidden {
    fn default() -> Self {
        Self::uniform(&[32])
    }
}

/// How incident edge states are pooled into a node update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    /// Sum divided by the AA-degree; keeps latent scale independent of degree.
    #[default]
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictorConfig {
    pub d_v: usize,
    pub d_e: usize,
    /// Number of affinity/assignment update rounds.
    pub layers: usize,
    pub mlp_hidden: MlpHidden,
    pub aggregation: Aggregation,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            d_v: 32,
            d_e: 32,
            layers: 5,
            mlp_hidden: MlpHidden::default(),
            aggregation: Aggregation::default(),
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_v < 1 || self.d_e < 1 || self.layers < 1 {
            return Err(Error::InvalidArgument(
                "latent widths and layer count must be at least 1".into(),
            ));
        }
        let h = &self.mlp_hidden;
        if [&h.rho_v, &h.rho_e, &h.tau, &h.kappa, &h.phi_n, &h.phi_e]
            .iter()
            .any(|w| w.contains(&0))
        {
            return Err(Error::InvalidArgument("hidden widths must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Positive-label weight `w`.
    pub weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { weight: 5.0 }
    }
}

/// Clamp applied to predictions before taking logs.
pub const LOSS_EPS: f64 = 1e-7;

/// Balanced cross-entropy of a soft assignment against 0/1 labels.
pub fn balanced_ce_loss(x: &[f64], x_gt: &[f64], cfg: &LossConfig) -> Result<f64> {
    if x.len() != x_gt.len() {
        return Err(Error::DimensionMismatch {
            expected: x_gt.len(),
            actual: x.len(),
        });
    }
    Ok(super::tape::bce_value(x, x_gt, cfg.weight, LOSS_EPS))
}

/// MLP weights are drawn from `±√6/√fan_in`, which keeps activation
/// variance roughly constant through ReLU layers. The bilinear maps use
/// `±1/√d_V` so that `ē` starts at the scale of its inputs.
const WEIGHT_GAIN: f64 = 2.449_489_742_783_178;

/// Affine–ReLU stack whose last layer is affine only. Layer `l` owns
/// `{prefix}.w{l}` (`in × out`, applied to row vectors) and `{prefix}.b{l}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mlp {
    prefix: String,
    widths: Vec<usize>,
}

impl Mlp {
    pub fn new(prefix: impl Into<String>, widths: Vec<usize>) -> Self {
        assert!(widths.len() >= 2, "an MLP needs input and output widths");
        Self {
            prefix: prefix.into(),
            widths,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn weight_name(&self, l: usize) -> String {
        format!("{}.w{l}", self.prefix)
    }

    pub fn bias_name(&self, l: usize) -> String {
        format!("{}.b{l}", self.prefix)
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<()> {
        for (l, pair) in self.widths.windows(2).enumerate() {
            store.insert_uniform(&self.weight_name(l), pair[0], pair[1], pair[0], WEIGHT_GAIN, rng)?;
            store.insert_uniform(&self.bias_name(l), 1, pair[1], pair[0], 1.0, rng)?;
        }
        Ok(())
    }

    fn check(&self, store: &ParamStore) -> Result<()> {
        for (l, pair) in self.widths.windows(2).enumerate() {
            for (name, shape) in [
                (self.weight_name(l), [pair[0], pair[1]]),
                (self.bias_name(l), [1, pair[1]]),
            ] {
                let p = store.get(&name).ok_or_else(|| Error::UnknownParameter(name.clone()))?;
                if [p.rows, p.cols] != shape {
                    return Err(Error::ShapeMismatch {
                        name,
                        expected: shape.to_vec(),
                        actual: vec![p.rows, p.cols],
                    });
                }
            }
        }
        Ok(())
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let cols = tape.value(input).cols;
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: cols,
            });
        }
        self.check(store)?;
        let last = self.widths.len() - 2;
        let mut h = input;
        for l in 0..=last {
            let w = tape.param(store, &self.weight_name(l));
            let b = tape.param(store, &self.bias_name(l));
            let z = tape.matmul(h, w);
            h = tape.add_row_broadcast(z, b);
            if l < last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}

/// Index arrays and attribute blocks of one AA-graph, shared by every
/// forward pass over it.
#[derive(Clone, Debug)]
pub struct AaInput {
    pub n1: usize,
    pub n2: usize,
    pub edges: Arc<[(usize, usize)]>,
    tails: Arc<[usize]>,
    heads: Arc<[usize]>,
    inv_degree: Vec<f64>,
    node_attrs: Tensor,
    edge_fwd: Tensor,
    edge_rev: Tensor,
}

impl AaInput {
    pub fn new(aa: &AaGraph) -> Self {
        let edges: Arc<[(usize, usize)]> = aa.edges().into();
        let e = edges.len();
        let mut fwd = Vec::with_capacity(e * EDGE_ATTR_DIM);
        let mut rev = Vec::with_capacity(e * EDGE_ATTR_DIM);
        for k in 0..e {
            fwd.extend_from_slice(&aa.edge_attrs()[k]);
            rev.extend_from_slice(&aa.reversed_edge_attr(k));
        }
        let mut degree = vec![0usize; aa.node_count()];
        for &(p, q) in edges.iter() {
            degree[p] += 1;
            degree[q] += 1;
        }
        Self {
            n1: aa.n1,
            n2: aa.n2,
            inv_degree: degree
                .iter()
                .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
                .collect(),
            tails: edges.iter().map(|e| e.0).collect(),
            heads: edges.iter().map(|e| e.1).collect(),
            edges,
            node_attrs: Tensor::new(aa.node_count(), aa.node_dim(), aa.node_attrs().to_vec()),
            edge_fwd: Tensor::new(e, EDGE_ATTR_DIM, fwd),
            edge_rev: Tensor::new(e, EDGE_ATTR_DIM, rev),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn node_dim(&self) -> usize {
        self.node_attrs.cols
    }
}

/// Latent node (`N × d_V`) and edge (`E × d_E`) blocks on a tape.
#[derive(Clone, Copy, Debug)]
pub struct LatentState {
    pub nodes: Var,
    pub edges: Var,
}

/// Decoded assignment scores (`N × 1`) and edge affinities (`E × 1`).
#[derive(Clone, Copy, Debug)]
pub struct Decoded {
    pub x: Var,
    pub off: Var,
}

#[derive(Clone, Debug)]
struct UpdateLayer {
    m1: String,
    m2: String,
    tau: Mlp,
    kappa: Mlp,
}

/// The AA-graph predictor: encoder, alternating update layers, decoder.
#[derive(Clone, Debug)]
pub struct Predictor {
    cfg: PredictorConfig,
    node_in: usize,
    rho_v: Mlp,
    rho_e: Mlp,
    layers: Vec<UpdateLayer>,
    phi_n: Mlp,
    phi_e: Mlp,
}

fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    std::iter::once(input)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(output))
        .collect()
}

impl Predictor {
    /// `node_in` is the AA-node attribute width, twice the descriptor width.
    pub fn new(cfg: &PredictorConfig, node_in: usize) -> Result<Self> {
        cfg.validate()?;
        let h = &cfg.mlp_hidden;
        let (dv, de) = (cfg.d_v, cfg.d_e);
        let layers = (0..cfg.layers)
            .map(|t| UpdateLayer {
                m1: format!("layer{t}.m1"),
                m2: format!("layer{t}.m2"),
                tau: Mlp::new(format!("layer{t}.tau"), widths(de + dv, &h.tau, de)),
                kappa: Mlp::new(format!("layer{t}.kappa"), widths(de + dv, &h.kappa, dv)),
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            node_in,
            rho_v: Mlp::new("encoder.rho_v", widths(node_in, &h.rho_v, dv)),
            rho_e: Mlp::new("encoder.rho_e", widths(EDGE_ATTR_DIM, &h.rho_e, de)),
            layers,
            phi_n: Mlp::new("decoder.phi_n", widths(dv, &h.phi_n, 1)),
            phi_e: Mlp::new("decoder.phi_e", widths(de, &h.phi_e, 1)),
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.cfg
    }

    pub fn node_in(&self) -> usize {
        self.node_in
    }

    /// Fresh parameters, uniform and scaled by fan-in, deterministic in `seed`.
    pub fn init_params(&self, seed: u64) -> Result<ParamStore> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        self.rho_v.init(&mut store, &mut rng)?;
        self.rho_e.init(&mut store, &mut rng)?;
        let dv = self.cfg.d_v;
        for layer in &self.layers {
            store.insert_uniform(&layer.m1, dv, dv, dv, 1.0, &mut rng)?;
            store.insert_uniform(&layer.m2, dv, dv, dv, 1.0, &mut rng)?;
            layer.tau.init(&mut store, &mut rng)?;
            layer.kappa.init(&mut store, &mut rng)?;
        }
        self.phi_n.init(&mut store, &mut rng)?;
        self.phi_e.init(&mut store, &mut rng)?;
        Ok(store)
    }

    fn check_input(&self, input: &AaInput) -> Result<()> {
        if input.node_dim() != self.node_in {
            return Err(Error::DimensionMismatch {
                expected: self.node_in,
                actual: input.node_dim(),
            });
        }
        Ok(())
    }

    /// Maps node attributes through `ρ_v` and edge attributes through `ρ_e`,
    /// averaging the two reading directions of each undirected edge.
    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, input: &AaInput) -> Result<LatentState> {
        self.check_input(input)?;
        let v_in = tape.constant(input.node_attrs.clone());
        let nodes = self.rho_v.forward(tape, store, v_in)?;
        let fwd_in = tape.constant(input.edge_fwd.clone());
        let rev_in = tape.constant(input.edge_rev.clone());
        let fwd = self.rho_e.forward(tape, store, fwd_in)?;
        let rev = self.rho_e.forward(tape, store, rev_in)?;
        let sum = tape.add(fwd, rev);
        let edges = tape.scale(sum, 0.5);
        Ok(LatentState { nodes, edges })
    }

    /// Edge update of layer `t`: `e ← τ([e; ē])` with
    /// `ē = ½[(M₁v_p)⊙(M₂v_q) + (M₁v_q)⊙(M₂v_p)]`.
    pub fn affinity_update(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        t: usize,
        state: LatentState,
        input: &AaInput,
    ) -> Result<Var> {
        let layer = self.layer(t)?;
        let m1 = tape.param(store, &layer.m1);
        let m2 = tape.param(store, &layer.m2);
        let a1 = tape.matmul(state.nodes, m1);
        let a2 = tape.matmul(state.nodes, m2);
        let a1p = tape.gather_rows(a1, input.tails.clone());
        let a2q = tape.gather_rows(a2, input.heads.clone());
        let a1q = tape.gather_rows(a1, input.heads.clone());
        let a2p = tape.gather_rows(a2, input.tails.clone());
        let pq = tape.mul(a1p, a2q);
        let qp = tape.mul(a1q, a2p);
        let both = tape.add(pq, qp);
        let e_bar = tape.scale(both, 0.5);
        let joined = tape.concat_cols(state.edges, e_bar);
        layer.tau.forward(tape, store, joined)
    }

    /// Node update of layer `t`: `v_p ← κ([agg_{e∋p} e; v_p])`, where an
    /// isolated node aggregates to zero.
    pub fn assignment_update(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        t: usize,
        state: LatentState,
        input: &AaInput,
    ) -> Result<Var> {
        let layer = self.layer(t)?;
        let n = input.node_count();
        let at_tail = tape.scatter_add_rows(state.edges, input.tails.clone(), n);
        let at_head = tape.scatter_add_rows(state.edges, input.heads.clone(), n);
        let mut agg = tape.add(at_tail, at_head);
        if self.cfg.aggregation == Aggregation::Mean {
            let de = tape.value(agg).cols;
            let scale: Vec<f64> = input
                .inv_degree
                .iter()
                .flat_map(|&w| std::iter::repeat_n(w, de))
                .collect();
            let c = tape.constant(Tensor::new(n, de, scale));
            agg = tape.mul(agg, c);
        }
        let joined = tape.concat_cols(agg, state.nodes);
        layer.kappa.forward(tape, store, joined)
    }

    pub fn decode(&self, tape: &mut Tape, store: &ParamStore, state: LatentState) -> Result<Decoded> {
        let xs = self.phi_n.forward(tape, store, state.nodes)?;
        let x = tape.sigmoid(xs);
        let es = self.phi_e.forward(tape, store, state.edges)?;
        let off = tape.sigmoid(es);
        Ok(Decoded { x, off })
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: &AaInput) -> Result<Decoded> {
        let mut state = self.encode(tape, store, input)?;
        for t in 0..self.layers.len() {
            state.edges = self.affinity_update(tape, store, t, state, input)?;
            state.nodes = self.assignment_update(tape, store, t, state, input)?;
        }
        self.decode(tape, store, state)
    }

    /// Values of [`Predictor::forward`]: `X_init` and the learned operator,
    /// whose diagonal repeats the decoded assignment scores.
    pub fn predict(&self, store: &ParamStore, input: &AaInput) -> Result<(AssignmentMatrix, SparseAffinity)> {
        let mut tape = Tape::new();
        let d = self.forward(&mut tape, store, input)?;
        let x = tape.value(d.x).data.clone();
        let off = &tape.value(d.off).data;
        let k = SparseAffinity::from_undirected(
            input.n1,
            input.n2,
            x.clone(),
            input.edges.iter().zip(off).map(|(&(p, q), &v)| (p, q, v)),
        )?;
        Ok((AssignmentMatrix::new(input.n1, input.n2, x)?, k))
    }

    fn layer(&self, t: usize) -> Result<&UpdateLayer> {
        self.layers
            .get(t)
            .ok_or_else(|| Error::InvalidArgument(format!("layer {t} out of range")))
    }
}

/// Convenience wrapper: a fresh tape, one forward pass, values out.
pub fn predictor_forward(
    aa: &AaGraph,
    store: &ParamStore,
    cfg: &PredictorConfig,
) -> Result<(AssignmentMatrix, SparseAffinity)> {
    Predictor::new(cfg, aa.node_dim())?.predict(store, &AaInput::new(aa))
}
