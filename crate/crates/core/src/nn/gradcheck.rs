use serde::Serialize;

use super::model::{LossConfig, Predictor};
use super::params::{Gradients, ParamStore};
use super::tape::{Tape, Var};
use super::train::{evaluate_example, Example};
use crate::error::Result;
use crate::solver::SolverConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    /// Max over scalars of `|g_ad − g_fd| / max(1e-8, |g_ad| + |g_fd|)`.
    pub max_rel_error: f64,
    /// Max over scalars of `|g_ad − g_fd|`, for scale-aware comparisons.
    pub max_abs_error: f64,
    pub max_abs_grad: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares `analytic` with central differences of `value` on every
/// trainable scalar. Frozen parameters are skipped.
pub fn finite_difference_check(
    store: &ParamStore,
    analytic: &Gradients,
    step: f64,
    value: impl Fn(&ParamStore) -> Result<f64>,
) -> Result<GradCheckReport> {
    let mut probe = store.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        max_abs_grad: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for (idx, name) in store.names().iter().enumerate() {
        let param = store.get_by_index(idx);
        if param.frozen {
            continue;
        }
        for (j, &orig) in param.value.iter().enumerate() {
            probe.params_mut()[idx].value[j] = orig + step;
            let up = value(&probe)?;
            probe.params_mut()[idx].value[j] = orig - step;
            let down = value(&probe)?;
            probe.params_mut()[idx].value[j] = orig;

            let fd = (up - down) / (2.0 * step);
            let ad = analytic.slot(idx)[j];
            let err = (ad - fd).abs() / (ad.abs() + fd.abs()).max(1e-8);
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max((ad - fd).abs());
            report.max_abs_grad = report.max_abs_grad.max(ad.abs());
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_param = name.clone();
                report.worst_index = j;
            }
        }
    }
    Ok(report)
}

/// Gradient check of an arbitrary scalar recorded by `f`.
pub fn grad_check_with(
    store: &ParamStore,
    step: f64,
    f: impl Fn(&mut Tape, &ParamStore) -> Result<Var>,
) -> Result<GradCheckReport> {
    let mut tape = Tape::new();
    let out = f(&mut tape, store)?;
    let analytic = tape.backward(out, store);
    finite_difference_check(store, &analytic, step, |s| {
        let mut t = Tape::new();
        let o = f(&mut t, s)?;
        Ok(t.value(o).data[0])
    })
}

/// Gradient check of the full pipeline: predictor, solver, loss.
pub fn grad_check(
    predictor: &Predictor,
    store: &ParamStore,
    ex: &Example,
    solver: &SolverConfig,
    loss: &LossConfig,
    step: f64,
) -> Result<GradCheckReport> {
    let analytic = evaluate_example(predictor, store, ex, solver, loss, true)?
        .grads
        .expect("gradients requested");
    finite_difference_check(store, &analytic, step, |s| {
        evaluate_example(predictor, s, ex, solver, loss, false).map(|e| e.loss)
    })
}
