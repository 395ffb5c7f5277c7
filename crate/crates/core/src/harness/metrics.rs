//! Per-iteration metrics computed from the exact gradient oracle.

use crate::algorithms::SwarmState;
use crate::objectives::ObjectiveSuite;
use crate::stack;

use super::trace::TraceRow;

/// Evaluates `f` and `∇f` at `x̄(t)`, the consensus error, and, when
/// `prev_mean_grad = ∇f(x̄(t−1))` is given, the tracking error of `s(t)`.
/// Returns the row (without step parameters) and `∇f(x̄(t))`.
pub fn compute_metrics(
    state: &SwarmState,
    suite: &ObjectiveSuite,
    prev_mean_grad: Option<&[f64]>,
) -> (TraceRow, Vec<f64>) {
    let mean = state.mean_x();
    let f_bar = suite.global_value(&mean).expect("state dimension checked by the driver");
    let grad = suite.global_grad(&mean).expect("state dimension checked by the driver");
    let track_err = prev_mean_grad.map(|target| {
        state.s.iter_rows().map(|s| stack::distance_sq(s, target)).sum::<f64>() / state.s.rows() as f64
    });
    let row = TraceRow {
        t: state.t,
        m: state.queries,
        f_bar,
        grad_norm_sq: stack::norm_sq(&grad),
        consensus_err: stack::distance_sq_to_mean(&state.x, &mean),
        track_err,
        eta_t: None,
        u_t: None,
    };
    (row, grad)
}

/// Carries `∇f(x̄(t−1))` from one row to the next.
#[derive(Debug, Clone)]
pub struct MetricTracker {
    tracking: bool,
    prev_grad: Option<Vec<f64>>,
}

impl MetricTracker {
    pub fn new(tracking: bool) -> Self {
        Self { tracking, prev_grad: None }
    }

    pub fn record(&mut self, state: &SwarmState, suite: &ObjectiveSuite, params: Option<(f64, f64)>) -> TraceRow {
        let prev = if self.tracking { self.prev_grad.as_deref() } else { None };
        let (mut row, grad) = compute_metrics(state, suite, prev);
        if let Some((eta, u)) = params {
            row.eta_t = Some(eta);
            row.u_t = Some(u);
        }
        self.prev_grad = Some(grad);
        row
    }
}
