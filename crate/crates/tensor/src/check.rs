//! Central finite-difference gradient checking.
//!
//! The numeric side only evaluates forward values, so it stays independent
//! of the backward rules it is used to verify.

use crate::error::Result;
use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Worst elementwise disagreement found by [`grad_check`].
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// `max |analytic − numeric| / max(1, |analytic|)`.
    pub max_error: f64,
    pub worst_param: Option<String>,
    pub worst_index: usize,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_error <= tol
    }
}

/// Numeric gradient of `f` with respect to one parameter.
pub fn numeric_gradient<F>(store: &ParamStore, id: ParamId, h: f64, mut f: F) -> Tensor
where
    F: FnMut(&ParamStore) -> f64,
{
    let mut probe = store.clone();
    let n = store.get(id).numel();
    let mut out = Tensor::zeros(store.get(id).shape());
    for k in 0..n {
        let x0 = store.get(id).data()[k];
        probe.get_mut(id).data_mut()[k] = x0 + h;
        let up = f(&probe);
        probe.get_mut(id).data_mut()[k] = x0 - h;
        let down = f(&probe);
        probe.get_mut(id).data_mut()[k] = x0;
        out.data_mut()[k] = (up - down) / (2.0 * h);
    }
    out
}

/// Compares tape gradients of `loss` against central differences for every
/// parameter in `store`. `loss` must be deterministic in its inputs.
pub fn grad_check<F>(store: &ParamStore, h: f64, loss: F) -> Result<GradCheckReport>
where
    F: for<'t> Fn(&'t Tape, &ParamStore) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let out = loss(&tape, store)?;
    let grads = tape.backward(out)?;
    let value_of = |s: &ParamStore| -> f64 {
        let t = Tape::new();
        loss(&t, s).map(|v| v.value().item()).unwrap_or(f64::NAN)
    };
    let mut report = GradCheckReport {
        max_error: 0.0,
        worst_param: None,
        worst_index: 0,
        checked: 0,
    };
    for id in store.ids() {
        let numeric = numeric_gradient(store, id, h, value_of);
        let zeros = Tensor::zeros(store.get(id).shape());
        let analytic = grads.param(id).unwrap_or(&zeros);
        for (k, (a, b)) in analytic.data().iter().zip(numeric.data()).enumerate() {
            let err = (a - b).abs() / a.abs().max(1.0);
            report.checked += 1;
            // A NaN error must surface as the worst one.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(err <= report.max_error) {
                report.max_error = err;
                report.worst_param = Some(store.name(id).to_string());
                report.worst_index = k;
            }
        }
    }
    Ok(report)
}
