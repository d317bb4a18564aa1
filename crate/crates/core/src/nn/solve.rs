use std::sync::Arc;

use super::tape::{Tape, Var};
use crate::solver::SolverConfig;

/// Output of the probabilistic solver recorded on a tape.
#[derive(Clone, Copy, Debug)]
pub struct TapeSolve {
    /// Final soft assignment, `N × 1` in match-index order.
    pub x: Var,
    pub iterations: usize,
    pub early_stop: bool,
}

/// Sinkhorn with a fixed number of row/column sweeps, so that the unrolled
/// graph does not depend on a data-dependent tolerance test.
pub fn sinkhorn_on_tape(tape: &mut Tape, x: Var, n1: usize, n2: usize, sweeps: usize, floor: f64) -> Var {
    let m = tape.reshape(x, n1, n2);
    let mut m = tape.clamp_min(m, floor);
    for _ in 0..sweeps {
        m = tape.row_normalize(m);
        m = tape.col_normalize(m);
    }
    tape.reshape(m, n1 * n2, 1)
}

/// Symmetric affinity operator living on a tape: diagonal `N × 1`, one
/// value per undirected edge `E × 1`.
#[derive(Clone, Debug)]
pub struct TapeOperator {
    pub diag: Var,
    pub off: Var,
    pub edges: Arc<[(usize, usize)]>,
    pub n1: usize,
    pub n2: usize,
}

/// The probabilistic solver recorded on a tape.
///
/// The refined operator is kept as `diag(s) K₁`; the early-stop test reads
/// values only, so gradients cover exactly the executed iterations.
pub fn solve_on_tape(tape: &mut Tape, k: &TapeOperator, x_init: Var, cfg: &SolverConfig) -> TapeSolve {
    let (n1, n2) = (k.n1, k.n2);
    let floor = cfg.ratio_floor;
    let mut x = tape.clamp_min(x_init, floor);
    let mut scale: Option<Var> = None;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let base = tape.sym_spmv(k.diag, k.off, k.edges.clone(), x);
        let propagated = match scale {
            Some(s) => tape.mul(s, base),
            None => base,
        };
        let next = sinkhorn_on_tape(tape, propagated, n1, n2, cfg.sinkhorn_iters, floor);
        let step: f64 = tape
            .value(next)
            .data
            .iter()
            .zip(&tape.value(x).data)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        if step < cfg.stop_eta {
            return TapeSolve {
                x: next,
                iterations,
                early_stop: true,
            };
        }
        if cfg.refine_affinity {
            let ratio = tape.div_floor(next, x, floor);
            scale = Some(match scale {
                Some(s) => tape.mul(s, ratio),
                None => ratio,
            });
        }
        x = next;
    }
    TapeSolve {
        x,
        iterations,
        early_stop: false,
    }
}
