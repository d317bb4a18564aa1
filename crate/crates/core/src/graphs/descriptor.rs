//! Shape-context style node descriptors built from Delaunay neighbourhoods.
//!
//! Each node gets an 8-bin soft histogram: four angular sectors measured
//! from the mean neighbour direction, times two log-distance shells split at
//! the graph's mean log edge length. Bins are soft-assigned so a small
//! perturbation of a neighbour moves the descriptor smoothly.

use super::Adjacency;

/// Descriptor width.
pub const DESCRIPTOR_DIM: usize = 8;

const ANGLE_BINS: usize = 4;
const ANGLE_CONCENTRATION: f64 = 2.0;
const SHELL_SOFTNESS: f64 = 0.35;

pub fn node_descriptors(points: &[[f64; 2]], adjacency: &Adjacency) -> Vec<Vec<f64>> {
    let edges = adjacency.edges();
    let shell_split = if edges.is_empty() {
        0.0
    } else {
        edges
            .iter()
            .map(|&(i, j)| length(sub(points[j], points[i])).max(1e-12).ln())
            .sum::<f64>()
            / edges.len() as f64
    };

    (0..points.len())
        .map(|i| {
            let offsets: Vec<[f64; 2]> = adjacency.neighbors(i).map(|j| sub(points[j], points[i])).collect();
            descriptor(&offsets, shell_split)
        })
        .collect()
}

fn descriptor(offsets: &[[f64; 2]], shell_split: f64) -> Vec<f64> {
    let mut hist = vec![0.0; DESCRIPTOR_DIM];
    if offsets.is_empty() {
        return hist;
    }
    let mut mean = [0.0, 0.0];
    for o in offsets {
        let l = length(*o).max(1e-12);
        mean[0] += o[0] / l;
        mean[1] += o[1] / l;
    }
    let reference = if length(mean) > 1e-9 {
        mean[1].atan2(mean[0])
    } else {
        0.0
    };

    for o in offsets {
        let theta = o[1].atan2(o[0]) - reference;
        let mut sector: Vec<f64> = (0..ANGLE_BINS)
            .map(|k| {
                let centre = k as f64 * std::f64::consts::TAU / ANGLE_BINS as f64;
                (ANGLE_CONCENTRATION * (theta - centre).cos()).exp()
            })
            .collect();
        let total: f64 = sector.iter().sum();
        sector.iter_mut().for_each(|w| *w /= total);

        let r = length(*o).max(1e-12).ln();
        let outer = 1.0 / (1.0 + (-(r - shell_split) / SHELL_SOFTNESS).exp());
        for (k, w) in sector.iter().enumerate() {
            hist[2 * k] += w * (1.0 - outer);
            hist[2 * k + 1] += w * outer;
        }
    }
    let count = offsets.len() as f64;
    hist.iter_mut().for_each(|h| *h /= count);
    hist
}

#[inline]
pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn length(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}
