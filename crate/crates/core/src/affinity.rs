//! Handcrafted affinity operators and the quadratic objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{build_aa_graph, AttributedGraph};
use crate::math::SparseAffinity;

/// Bandwidths of the geometric edge-agreement kernel and the unary weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AffinityConfig {
    pub sigma_len: f64,
    pub sigma_ang: f64,
    pub unary_weight: f64,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        Self {
            sigma_len: 0.1,
            sigma_ang: 0.5,
            unary_weight: 0.5,
        }
    }
}

impl AffinityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_len > 0.0 && self.sigma_ang > 0.0) {
            return Err(Error::InvalidArgument("affinity bandwidths must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.unary_weight) {
            return Err(Error::InvalidArgument(format!(
                "unary weight must lie in [0, 1], got {}",
                self.unary_weight
            )));
        }
        Ok(())
    }
}

/// Unary similarity of two descriptors.
pub fn unary_affinity(f1: &[f64], f2: &[f64], cfg: &AffinityConfig) -> f64 {
    let d2: f64 = f1.iter().zip(f2).map(|(a, b)| (a - b).powi(2)).sum();
    cfg.unary_weight * (-d2 / 2.0).exp()
}

/// Agreement of segment `u1→v1` in graph 1 with `u2→v2` in graph 2:
/// a Gaussian in the length difference times a Gaussian in the undirected
/// orientation difference.
pub fn edge_agreement(u1: [f64; 2], v1: [f64; 2], u2: [f64; 2], v2: [f64; 2], cfg: &AffinityConfig) -> f64 {
    let (d1, d2) = ([v1[0] - u1[0], v1[1] - u1[1]], [v2[0] - u2[0], v2[1] - u2[1]]);
    let dlen = (d1[0].hypot(d1[1]) - d2[0].hypot(d2[1])).abs();
    let dang = orientation_gap(d1[1].atan2(d1[0]), d2[1].atan2(d2[0]));
    (-(dlen / cfg.sigma_len).powi(2)).exp() * (-(dang / cfg.sigma_ang).powi(2)).exp()
}

/// Smallest angle between two undirected orientations, in `[0, π/2]`.
pub fn orientation_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

/// Affinity operator for a graph pair: descriptor similarity on the
/// diagonal, edge agreement on jointly present edge pairs, zero elsewhere.
pub fn assemble_affinity(g1: &AttributedGraph, g2: &AttributedGraph, cfg: &AffinityConfig) -> Result<SparseAffinity> {
    cfg.validate()?;
    if g1.is_empty() || g2.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build affinity for an empty graph".into(),
        ));
    }
    let aa = build_aa_graph(g1, g2)?;
    let mut unary = Vec::with_capacity(aa.node_count());
    for f1 in g1.features() {
        for f2 in g2.features() {
            unary.push(unary_affinity(f1, f2, cfg));
        }
    }
    let entries = aa.edges().iter().zip(aa.edge_attrs()).map(|(&(p, q), e)| {
        let v = edge_agreement([e[0], e[1]], [e[2], e[3]], [e[4], e[5]], [e[6], e[7]], cfg);
        (p, q, v)
    });
    SparseAffinity::from_undirected(g1.len(), g2.len(), unary, entries)
}

/// Quadratic objective `xᵀ K x`.
pub fn objective(k: &SparseAffinity, x: &[f64]) -> Result<f64> {
    let y = k.spmv(x)?;
    Ok(y.iter().zip(x).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Adjacency;

    #[test]
    fn orientation_gap_wraps_at_pi() {
        assert!(orientation_gap(0.1, std::f64::consts::PI + 0.1).abs() < 1e-12);
        assert!((orientation_gap(0.0, 3.0) - (std::f64::consts::PI - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn identical_segments_agree_fully() {
        let cfg = AffinityConfig::default();
        assert_eq!(
            edge_agreement([0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0], &cfg),
            1.0
        );
        assert_eq!(
            edge_agreement([0.0, 0.0], [1.0, 1.0], [1.0, 1.0], [0.0, 0.0], &cfg),
            1.0
        );
    }

    #[test]
    fn edgeless_graph_gives_diagonal_operator() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let feats = vec![vec![0.0]; 3];
        let g1 = AttributedGraph::new(pts.clone(), feats.clone(), Adjacency::empty(3)).unwrap();
        let g2 = AttributedGraph::new(pts, feats, Adjacency::complete(3)).unwrap();
        let k = assemble_affinity(&g1, &g2, &AffinityConfig::default()).unwrap();
        assert!(k.pairs().is_empty());
        assert!(k.unary().iter().all(|&u| u == 0.5));
    }

    #[test]
    fn objective_of_one_hot_on_identity() {
        let k = SparseAffinity::diagonal(2, 2, vec![1.0; 4]).unwrap();
        assert_eq!(objective(&k, &[0.0, 1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(objective(&k, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AffinityConfig {
            sigma_len: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
