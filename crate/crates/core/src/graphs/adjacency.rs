use delaunator::{triangulate, Point};

use crate::error::{Error, Result};

/// Symmetric boolean adjacency without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    bits: Vec<bool>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut a = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    a.bits[i * n + j] = true;
                }
            }
        }
        a
    }

    /// Builds the adjacency from undirected edges; both orientations are set.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = Self::empty(n);
        for &(i, j) in edges {
            a.insert(i, j)?;
        }
        Ok(a)
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<()> {
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidArgument(format!(
                "edge ({i}, {j}) out of range for {} nodes",
                self.n
            )));
        }
        if i == j {
            return Err(Error::InvalidArgument(format!("self-loop on node {i}")));
        }
        self.bits[i * self.n + j] = true;
        self.bits[j * self.n + i] = true;
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in self.neighbors(i) {
                if !std::mem::replace(&mut seen[j], true) {
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Result of [`delaunay_adjacency`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulated {
    pub adjacency: Adjacency,
    /// Set when the input was degenerate and the complete graph was used.
    pub fallback: bool,
}

/// Delaunay-triangulation adjacency of 2-D points.
///
/// Fewer than three points, or an all-collinear set, yields the complete
/// graph with `fallback` set. Points the triangulation leaves isolated
/// (exact duplicates) are joined to their nearest neighbour so the graph
/// stays connected.
pub fn delaunay_adjacency(points: &[[f64; 2]]) -> Triangulated {
    let n = points.len();
    if n < 3 {
        return Triangulated {
            adjacency: Adjacency::complete(n),
            fallback: true,
        };
    }
    let pts: Vec<Point> = points.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&pts);
    if tri.triangles.is_empty() {
        return Triangulated {
            adjacency: Adjacency::complete(n),
            fallback: true,
        };
    }
    let mut adj = Adjacency::empty(n);
    for t in tri.triangles.chunks(3) {
        for k in 0..3 {
            let (i, j) = (t[k], t[(k + 1) % 3]);
            if i != j {
                adj.insert(i, j).expect("triangulation indices are in range");
            }
        }
    }
    for i in 0..n {
        if adj.degree(i) == 0 {
            let nearest = (0..n)
                .filter(|&j| j != i)
                .min_by(|&a, &b| dist2(points[i], points[a]).total_cmp(&dist2(points[i], points[b])))
                .expect("at least three points");
            adj.insert(i, nearest).expect("indices are in range");
        }
    }
    Triangulated {
        adjacency: adj,
        fallback: false,
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}
