use serde::{Deserialize, Serialize};

use crate::affinity::objective;
use crate::error::{Error, Result};
use crate::math::{binary_score, sinkhorn, AssignmentMatrix, SparseAffinity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Outer iteration cap `S`.
    pub max_iters: usize,
    /// Early-stop threshold `η` on `‖x_{t+1} − x_t‖²`.
    pub stop_eta: f64,
    pub sinkhorn_iters: usize,
    pub sinkhorn_tol: f64,
    /// Floor on the denominator of the refinement ratio and on `X_init`.
    pub ratio_floor: f64,
    /// When false the affinity is never refined and the loop is a
    /// Sinkhorn-projected power iteration.
    pub refine_affinity: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 10,
            stop_eta: 1e-5,
            sinkhorn_iters: 20,
            sinkhorn_tol: 1e-9,
            ratio_floor: 1e-12,
            refine_affinity: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument("solver needs at least one iteration".into()));
        }
        if !(self.stop_eta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stop threshold must be positive, got {}",
                self.stop_eta
            )));
        }
        if !(self.ratio_floor > 0.0 && self.sinkhorn_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "ratio floor and sinkhorn tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxIters,
}

/// Per-iteration record of a probabilistic solve. Index 0 is the floored
/// initial assignment; index `t` is the Sinkhorn output of iteration `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub assignments: Vec<AssignmentMatrix>,
    pub binary_scores: Vec<f64>,
    /// `xᵀ K₁ x` under the input (unrefined) affinity.
    pub objectives: Vec<f64>,
    /// `‖x_{t+1} − x_t‖²` for each executed iteration.
    pub step_norms: Vec<f64>,
    /// Row scale accumulated by the refinement, i.e. `K_t = diag(scale) K₁`,
    /// including the refinement after the last executed iteration when the
    /// loop ran to the cap.
    pub final_row_scale: Vec<f64>,
    pub stop_reason: StopReason,
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.step_norms.len()
    }
}

/// Iteratively refines an initial assignment against an affinity operator.
///
/// Each iteration propagates `x ← K_t x`, projects the result with Sinkhorn,
/// stops early once the squared step falls under `η`, and otherwise scales
/// row `p` of `K_t` by `x_{t+1,p} / max(x_{t,p}, floor)`.
pub fn probabilistic_solve(
    k: &SparseAffinity,
    x_init: &AssignmentMatrix,
    cfg: &SolverConfig,
) -> Result<(AssignmentMatrix, SolveTrace)> {
    cfg.validate()?;
    if x_init.n1() != k.n1() || x_init.n2() != k.n2() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            actual: x_init.entries().len(),
        });
    }
    let (n1, n2) = (k.n1(), k.n2());
    let floor = cfg.ratio_floor;
    let mut x: Vec<f64> = x_init.entries().iter().map(|v| v.max(floor)).collect();

    let mut trace = SolveTrace {
        assignments: Vec::new(),
        binary_scores: Vec::new(),
        objectives: Vec::new(),
        step_norms: Vec::new(),
        final_row_scale: vec![1.0; k.dim()],
        stop_reason: StopReason::MaxIters,
    };
    let record = |trace: &mut SolveTrace, x: &[f64]| -> Result<()> {
        let m = AssignmentMatrix::new(n1, n2, x.to_vec())?;
        trace.binary_scores.push(binary_score(&m)?);
        trace.objectives.push(objective(k, x)?);
        trace.assignments.push(m);
        Ok(())
    };
    record(&mut trace, &x)?;

    if k.is_zero() {
        let out = sinkhorn(
            &AssignmentMatrix::new(n1, n2, x.clone())?,
            cfg.sinkhorn_iters,
            cfg.sinkhorn_tol,
            floor,
        )?;
        trace.step_norms.push(squared_distance(out.entries(), &x));
        record(&mut trace, out.entries())?;
        trace.stop_reason = StopReason::EarlyStop;
        return Ok((out, trace));
    }

    let mut unary = k.unary().to_vec();
    let mut off: Vec<f64> = k.pairs().iter().map(|pr| pr.value).collect();
    let row_ranges: Vec<std::ops::Range<usize>> = {
        let mut start = 0;
        (0..k.dim())
            .map(|p| {
                let len = k.row(p).len();
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    };

    let mut current = AssignmentMatrix::new(n1, n2, x.clone())?;
    for _ in 0..cfg.max_iters {
        let propagated: Vec<f64> = (0..k.dim())
            .map(|p| {
                let r = row_ranges[p].clone();
                let acc: f64 = k.pairs()[r.clone()]
                    .iter()
                    .zip(&off[r])
                    .map(|(pr, v)| v * x[pr.q])
                    .sum();
                unary[p] * x[p] + acc
            })
            .collect();
        let next = sinkhorn(
            &AssignmentMatrix::new(n1, n2, propagated)?,
            cfg.sinkhorn_iters,
            cfg.sinkhorn_tol,
            floor,
        )?;
        let step = squared_distance(next.entries(), &x);
        trace.step_norms.push(step);
        record(&mut trace, next.entries())?;
        current = next;
        if step < cfg.stop_eta {
            trace.stop_reason = StopReason::EarlyStop;
            break;
        }
        if cfg.refine_affinity {
            for p in 0..k.dim() {
                let ratio = current.entries()[p] / x[p].max(floor);
                unary[p] *= ratio;
                off[row_ranges[p].clone()].iter_mut().for_each(|v| *v *= ratio);
                trace.final_row_scale[p] *= ratio;
            }
        }
        x.copy_from_slice(current.entries());
    }
    Ok((current, trace))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::discretize;

    #[test]
    fn diagonal_profit_resolves_to_identity() {
        let k = SparseAffinity::diagonal(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (x, trace) = probabilistic_solve(&k, &AssignmentMatrix::uniform(2, 2), &SolverConfig::default()).unwrap();
        assert_eq!(discretize(&x).unwrap().mapping(), &[0, 1]);
        // First step is Sinkhorn of (1, .5, .5, 1): exactly 2/3 on the diagonal.
        assert!((trace.assignments[1].get(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!(trace.binary_scores.last().unwrap() > &trace.binary_scores[0]);
    }

    #[test]
    fn zero_affinity_returns_normalized_init() {
        let k = SparseAffinity::diagonal(2, 2, vec![0.0; 4]).unwrap();
        let init = AssignmentMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (x, trace) = probabilistic_solve(&k, &init, &SolverConfig::default()).unwrap();
        assert_eq!(trace.stop_reason, StopReason::EarlyStop);
        assert_eq!(trace.iterations(), 1);
        assert!((x.get(0, 0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn early_stop_records_small_step() {
        let k = SparseAffinity::diagonal(2, 2, vec![5.0, 1.0, 1.0, 5.0]).unwrap();
        let (_, trace) = probabilistic_solve(&k, &AssignmentMatrix::uniform(2, 2), &SolverConfig::default()).unwrap();
        assert_eq!(trace.stop_reason, StopReason::EarlyStop);
        assert!(*trace.step_norms.last().unwrap() < 1e-5);
        assert!(trace.assignments.len() <= 11);
    }

    #[test]
    fn rejects_invalid_config_and_shapes() {
        let k = SparseAffinity::diagonal(2, 2, vec![1.0; 4]).unwrap();
        let cfg = SolverConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(probabilistic_solve(&k, &AssignmentMatrix::uniform(2, 2), &cfg).is_err());
        assert!(probabilistic_solve(&k, &AssignmentMatrix::uniform(3, 3), &SolverConfig::default()).is_err());
    }
}
