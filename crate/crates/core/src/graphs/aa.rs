use super::AttributedGraph;
use crate::error::{Error, Result};
use crate::math::match_index;

/// Width of an AA-edge attribute: four concatenated 2-D points.
pub const EDGE_ATTR_DIM: usize = 8;

/// Association graph over candidate matches.
///
/// Node `p = i * n2 + a` stands for match `(i, a)` and carries `[f_i; f_a]`.
/// An undirected edge joins `(i, a)` and `(j, b)` exactly when `i–j` is an
/// edge of graph 1 and `a–b` an edge of graph 2. Edges are stored once with
/// `p < q`; the attribute of `(p, q)` is `[p_i; p_j; p_a; p_b]` read in that
/// orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct AaGraph {
    pub n1: usize,
    pub n2: usize,
    node_dim: usize,
    node_attrs: Vec<f64>,
    edges: Vec<(usize, usize)>,
    edge_attrs: Vec<[f64; EDGE_ATTR_DIM]>,
}

impl AaGraph {
    pub fn node_count(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn node_dim(&self) -> usize {
        self.node_dim
    }

    /// Row-major `node_count × node_dim` attribute block.
    pub fn node_attrs(&self) -> &[f64] {
        &self.node_attrs
    }

    pub fn node_attr(&self, p: usize) -> &[f64] {
        &self.node_attrs[p * self.node_dim..(p + 1) * self.node_dim]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_attrs(&self) -> &[[f64; EDGE_ATTR_DIM]] {
        &self.edge_attrs
    }

    /// Attribute of edge `k` read from `q` to `p`: `[p_j; p_i; p_b; p_a]`.
    pub fn reversed_edge_attr(&self, k: usize) -> [f64; EDGE_ATTR_DIM] {
        let e = &self.edge_attrs[k];
        [e[2], e[3], e[0], e[1], e[6], e[7], e[4], e[5]]
    }
}

pub fn build_aa_graph(g1: &AttributedGraph, g2: &AttributedGraph) -> Result<AaGraph> {
    if g1.feature_dim() != g2.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.feature_dim(),
            actual: g2.feature_dim(),
        });
    }
    let (n1, n2) = (g1.len(), g2.len());
    let d = g1.feature_dim();
    let node_dim = 2 * d;
    let mut node_attrs = Vec::with_capacity(n1 * n2 * node_dim);
    for i in 0..n1 {
        for a in 0..n2 {
            node_attrs.extend_from_slice(&g1.features()[i]);
            node_attrs.extend_from_slice(&g2.features()[a]);
        }
    }

    let mut edges = Vec::new();
    let mut edge_attrs = Vec::new();
    let (p1, p2) = (g1.points(), g2.points());
    let e2 = g2.adjacency().edges();
    for (i, j) in g1.adjacency().edges() {
        for &(a, b) in &e2 {
            for (a, b) in [(a, b), (b, a)] {
                let (p, q) = (match_index(i, a, n2), match_index(j, b, n2));
                let (p, q, i, j, a, b) = if p < q { (p, q, i, j, a, b) } else { (q, p, j, i, b, a) };
                edges.push((p, q));
                edge_attrs.push([
                    p1[i][0], p1[i][1], p1[j][0], p1[j][1], p2[a][0], p2[a][1], p2[b][0], p2[b][1],
                ]);
            }
        }
    }
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by_key(|&k| edges[k]);
    let edges = order.iter().map(|&k| edges[k]).collect();
    let edge_attrs = order.iter().map(|&k| edge_attrs[k]).collect();

    Ok(AaGraph {
        n1,
        n2,
        node_dim,
        node_attrs,
        edges,
        edge_attrs,
    })
}
