//! Learning-free QAP baselines: spectral matching, IPFP and RRWM.

use serde::{Deserialize, Serialize};

use super::discretize_vector;
use crate::affinity::objective;
use crate::error::{Error, Result};
use crate::math::{sinkhorn, AssignmentMatrix, SparseAffinity};

/// Relaxed solution plus the number of outer iterations used.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxation {
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// Principal eigenvector of `K` by power iteration from the uniform vector.
pub fn spectral_match(k: &SparseAffinity, iters: usize) -> Result<Relaxation> {
    let n = k.dim();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for it in 0..iters {
        let y = k.spmv(&x)?;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidAffinity("power iteration hit the zero vector".into()));
        }
        let next: Vec<f64> = y.iter().map(|v| v / norm).collect();
        let moved = next.iter().zip(&x).any(|(a, b)| a != b);
        x = next;
        if !moved {
            return Ok(Relaxation { x, iterations: it + 1 });
        }
    }
    Ok(Relaxation { x, iterations: iters })
}

/// Integer projected fixed point.
///
/// Each step discretizes the gradient direction `K x` with the Hungarian
/// method, then line-searches the quadratic objective on the segment
/// towards that permutation. The best permutation visited is returned when
/// it scores at least as well as the final iterate.
pub fn ipfp(k: &SparseAffinity, x0: &[f64], max_iters: usize) -> Result<Relaxation> {
    if x0.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            actual: x0.len(),
        });
    }
    if x0.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument("ipfp start must be nonnegative".into()));
    }
    let (n1, n2) = (k.n1(), k.n2());
    let mut x = x0.to_vec();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let grad = k.spmv(&x)?;
        let b = discretize_vector(&grad, n1, n2)?.to_indicator(n2);
        let score_b = objective(k, &b)?;
        if best.as_ref().is_none_or(|(_, s)| score_b > *s) {
            best = Some((b.clone(), score_b));
        }
        let dir: Vec<f64> = b.iter().zip(&x).map(|(u, v)| u - v).collect();
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        let fx: f64 = grad.iter().zip(&x).map(|(g, v)| g * v).sum();
        if slope <= 1e-12 * fx.abs().max(1.0) {
            break;
        }
        let curvature = objective(k, &dir)?;
        let step = if curvature >= 0.0 {
            1.0
        } else {
            (-slope / curvature).min(1.0)
        };
        x.iter_mut().zip(&dir).for_each(|(v, d)| *v += step * d);
    }
    let fx = objective(k, &x)?;
    match best {
        Some((b, s)) if s >= fx => Ok(Relaxation { x: b, iterations }),
        _ => Ok(Relaxation { x, iterations }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrwmConfig {
    /// Weight of the reweighted jump; zero gives plain power iteration.
    pub alpha: f64,
    /// Exponent of the jump's inflation.
    pub inflation: f64,
    pub max_iters: usize,
}

impl Default for RrwmConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            inflation: 30.0,
            max_iters: 100,
        }
    }
}

/// Reweighted random walk on the association graph.
///
/// The walk step is `Kx` normalized to unit ℓ₁ mass; the jump
/// exponentiates the walk (scaled by its maximum) with factor `inflation`,
/// projects it with Sinkhorn and mixes it in with weight `alpha`.
pub fn rrwm(k: &SparseAffinity, alpha: f64, inflation: f64, max_iters: usize) -> Result<Relaxation> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "rrwm alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let n = k.dim();
    let (n1, n2) = (k.n1(), k.n2());
    let mut x = vec![1.0 / n as f64; n];
    for it in 0..max_iters {
        let mut walk = k.spmv(&x)?;
        let mass: f64 = walk.iter().sum();
        if mass == 0.0 {
            return Err(Error::InvalidAffinity("random walk lost all mass".into()));
        }
        walk.iter_mut().for_each(|v| *v /= mass);
        let next = if alpha > 0.0 {
            let peak = walk.iter().cloned().fold(0.0, f64::max);
            let inflated: Vec<f64> = walk.iter().map(|v| (inflation * v / peak).exp()).collect();
            let projected = sinkhorn(&AssignmentMatrix::new(n1, n2, inflated)?, 20, 1e-9, 1e-12)?;
            let jump_mass: f64 = projected.entries().iter().sum();
            let mixed: Vec<f64> = walk
                .iter()
                .zip(projected.entries())
                .map(|(w, j)| (1.0 - alpha) * w + alpha * j / jump_mass)
                .collect();
            let total: f64 = mixed.iter().sum();
            mixed.into_iter().map(|v| v / total).collect()
        } else {
            walk
        };
        let delta = next.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        x = next;
        if delta < 1e-8 {
            return Ok(Relaxation { x, iterations: it + 1 });
        }
    }
    Ok(Relaxation {
        x,
        iterations: max_iters,
    })
}

/// [`rrwm`] with settings bundled in an [`RrwmConfig`].
pub fn rrwm_with(k: &SparseAffinity, cfg: &RrwmConfig) -> Result<Relaxation> {
    rrwm(k, cfg.alpha, cfg.inflation, cfg.max_iters)
}
