//! Attributed keypoint graphs, synthetic pair generation and the
//! affinity-assignment (AA) graph over candidate matches.

mod aa;
mod adjacency;
mod descriptor;
mod synth;

pub use aa::{build_aa_graph, AaGraph, EDGE_ATTR_DIM};
pub use adjacency::{delaunay_adjacency, Adjacency, Triangulated};
pub use descriptor::{node_descriptors, DESCRIPTOR_DIM};
pub use synth::{synthesize_pair, synthesize_with, Dataset, GraphPair, PairMeta, SynthConfig, SCHEMA_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Keypoint graph: coordinates, per-node descriptors and symmetric topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDoc", into = "GraphDoc")]
pub struct AttributedGraph {
    points: Vec<[f64; 2]>,
    features: Vec<Vec<f64>>,
    adjacency: Adjacency,
}

impl AttributedGraph {
    pub fn new(points: Vec<[f64; 2]>, features: Vec<Vec<f64>>, adjacency: Adjacency) -> Result<Self> {
        let n = points.len();
        if features.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: features.len(),
            });
        }
        if adjacency.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: adjacency.len(),
            });
        }
        if let Some(first) = features.first() {
            let d = first.len();
            if let Some(bad) = features.iter().find(|f| f.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: bad.len(),
                });
            }
        }
        Ok(Self {
            points,
            features,
            adjacency,
        })
    }

    /// Delaunay topology plus geometric descriptors for the given points.
    pub fn from_points(points: Vec<[f64; 2]>) -> Self {
        let adjacency = delaunay_adjacency(&points).adjacency;
        let features = node_descriptors(&points, &adjacency);
        Self {
            points,
            features,
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    /// Copy with node `k` moved to position `perm[k]`.
    pub fn relabeled(&self, perm: &crate::math::Permutation) -> Self {
        let n = self.len();
        let mut points = vec![[0.0; 2]; n];
        let mut features = vec![Vec::new(); n];
        for (k, &to) in perm.mapping().iter().enumerate() {
            points[to] = self.points[k];
            features[to] = self.features[k].clone();
        }
        let mut adjacency = Adjacency::empty(n);
        for (i, j) in self.adjacency.edges() {
            adjacency
                .insert(perm.mapping()[i], perm.mapping()[j])
                .expect("permutation preserves range");
        }
        Self {
            points,
            features,
            adjacency,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    points: Vec<[f64; 2]>,
    features: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphDoc> for AttributedGraph {
    type Error = Error;

    fn try_from(doc: GraphDoc) -> Result<Self> {
        let adjacency = Adjacency::from_edges(doc.points.len(), &doc.edges)?;
        Self::new(doc.points, doc.features, adjacency)
    }
}

impl From<AttributedGraph> for GraphDoc {
    fn from(g: AttributedGraph) -> Self {
        GraphDoc {
            edges: g.adjacency.edges(),
            points: g.points,
            features: g.features,
        }
    }
}
