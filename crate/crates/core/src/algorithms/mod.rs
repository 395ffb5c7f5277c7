//! Iteration kernels, parameter schedules and the driver loop.

mod kernels;
pub mod schedule;

pub use kernels::{alg1_step, alg2_step, hybrid_step, step, AlgorithmError, Kernel, SwarmState};
pub use schedule::{
    schedule_theorem1, schedule_theorem2, schedule_theorem3, schedule_theorem4, theorem2_offset,
    theorem3_step_ceiling, theorem4_lambda, PowerDecay, RadiusRule, Schedule, ScheduleError, ScheduleKind,
};

use thiserror::Error;

use crate::harness::metrics::MetricTracker;
use crate::harness::Trace;
use crate::network::MixingMatrix;
use crate::objectives::ObjectiveSuite;
use crate::stack::AgentStack;

/// A failed run together with every row recorded before the failure.
#[derive(Debug, Error, Clone)]
#[error("{error}")]
pub struct RunError {
    #[source]
    pub error: AlgorithmError,
    pub partial: Trace,
}

/// Runs `iterations` steps from `x0`, recording one trace row per iteration
/// plus the initial row at `t = 0`.
pub fn run(
    kernel: Kernel,
    suite: &ObjectiveSuite,
    w: &MixingMatrix,
    schedule: &Schedule,
    x0: AgentStack,
    iterations: u64,
    seed: u64,
) -> Result<Trace, RunError> {
    run_with_observer(kernel, suite, w, schedule, x0, iterations, seed, |_| {})
}

/// As [`run`], calling `observe` with the state after every step.
#[allow(clippy::too_many_arguments)]
pub fn run_with_observer(
    kernel: Kernel,
    suite: &ObjectiveSuite,
    w: &MixingMatrix,
    schedule: &Schedule,
    x0: AgentStack,
    iterations: u64,
    seed: u64,
    mut observe: impl FnMut(&SwarmState),
) -> Result<Trace, RunError> {
    let mut trace = Trace::new(kernel);
    if iterations == 0 {
        return Err(RunError {
            error: AlgorithmError::NoIterations,
            partial: trace,
        });
    }
    if x0.rows() != suite.agents() || x0.dim() != suite.dim() {
        return Err(RunError {
            error: AlgorithmError::Shape {
                rows: x0.rows(),
                dim: x0.dim(),
                n: suite.agents(),
                d: suite.dim(),
            },
            partial: trace,
        });
    }
    let mut state = SwarmState::new(x0);
    let mut tracker = MetricTracker::new(kernel.tracks_gradient());
    let queries = suite.queries();
    trace.push(tracker.record(&state, suite, None));
    for _ in 0..iterations {
        if let Err(error) = step(kernel, &mut state, &queries, w, schedule, seed) {
            return Err(RunError { error, partial: trace });
        }
        let t = state.t;
        trace.push(tracker.record(&state, suite, Some((schedule.eta(t), schedule.u(t)))));
        observe(&state);
    }
    Ok(trace)
}
