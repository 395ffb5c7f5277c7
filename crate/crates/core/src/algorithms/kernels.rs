//! The synchronous iteration kernels. All use the adapt-then-combine form:
//! each agent takes its local step first and the mixing matrix averages the
//! results.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::estimators::{self, EstimatorError, Probe};
use crate::network::{self, MixingMatrix};
use crate::objectives::ValueQueries;
use crate::rng::RngStream;
use crate::stack::AgentStack;

use super::schedule::Schedule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("iterate diverged at agent {agent}, iteration {iteration}")]
    Divergence { agent: usize, iteration: u64 },
    #[error("agent {agent} failed to evaluate at iteration {iteration}: {source}")]
    Evaluation {
        agent: usize,
        iteration: u64,
        #[source]
        source: EstimatorError,
    },
    #[error("state shape {rows}x{dim} does not match suite {n}x{d}")]
    Shape {
        rows: usize,
        dim: usize,
        n: usize,
        d: usize,
    },
    #[error("iteration count must be at least 1")]
    NoIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// 2-point estimator, consensus on the iterates only.
    Alg1,
    /// 2d-point estimator with gradient tracking.
    Alg2,
    /// 2-point estimator with gradient tracking.
    Hybrid,
}

impl Kernel {
    /// Function-value queries per agent per iteration.
    pub fn queries_per_step(&self, d: usize) -> u64 {
        match self {
            Kernel::Alg1 | Kernel::Hybrid => 2,
            Kernel::Alg2 => 2 * d as u64,
        }
    }

    pub fn tracks_gradient(&self) -> bool {
        !matches!(self, Kernel::Alg1)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Alg1 => "alg1",
            Kernel::Alg2 => "alg2",
            Kernel::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alg1" => Ok(Kernel::Alg1),
            "alg2" => Ok(Kernel::Alg2),
            "hybrid" => Ok(Kernel::Hybrid),
            other => Err(format!("unknown kernel {other:?}")),
        }
    }
}

/// Per-agent iterates, trackers and last gradient estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub x: AgentStack,
    /// Gradient trackers; stays zero for [`Kernel::Alg1`].
    pub s: AgentStack,
    /// Estimates from the previous iteration, `g^i(t)` after a step.
    pub g_prev: AgentStack,
    pub t: u64,
    /// Cumulative function-value queries made by each agent.
    pub queries: u64,
}

impl SwarmState {
    /// Initial state with `s(0) = g(0) = 0`.
    pub fn new(x0: AgentStack) -> Self {
        let (n, d) = (x0.rows(), x0.dim());
        Self {
            x: x0,
            s: AgentStack::zeros(n, d),
            g_prev: AgentStack::zeros(n, d),
            t: 0,
            queries: 0,
        }
    }

    pub fn mean_x(&self) -> Vec<f64> {
        self.x.mean()
    }
}

fn check_shape(state: &SwarmState, queries: &ValueQueries<'_>) -> Result<(), AlgorithmError> {
    let (rows, dim) = (state.x.rows(), state.x.dim());
    if rows != queries.agents() || dim != queries.dim() {
        return Err(AlgorithmError::Shape {
            rows,
            dim,
            n: queries.agents(),
            d: queries.dim(),
        });
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum Estimator {
    TwoPoint { seed: u64 },
    Coordinate,
}

fn estimate_all(
    estimator: Estimator,
    state: &SwarmState,
    queries: &ValueQueries<'_>,
    u: f64,
    iteration: u64,
) -> Result<AgentStack, AlgorithmError> {
    let (n, d) = (state.x.rows(), state.x.dim());
    let mut g = AgentStack::zeros(n, d);
    for i in 0..n {
        let mut probe = Probe::new(queries.local(i));
        let x = state.x.row(i);
        let est = match estimator {
            Estimator::TwoPoint { seed } => estimators::sample_sphere(d, RngStream::new(seed, i, iteration))
                .and_then(|z| estimators::estimate_2point(&mut probe, x, u, &z)),
            Estimator::Coordinate => estimators::estimate_2d_point(&mut probe, x, u),
        }
        .map_err(|source| AlgorithmError::Evaluation {
            agent: i,
            iteration,
            source,
        })?;
        g.row_mut(i).copy_from_slice(&est);
    }
    Ok(g)
}

fn check_finite(stack: &AgentStack, iteration: u64) -> Result<(), AlgorithmError> {
    match stack.first_non_finite() {
        Some((agent, _)) => Err(AlgorithmError::Divergence { agent, iteration }),
        None => Ok(()),
    }
}

/// `x^i ← Σ_j W_ij (x^j − η_t g^j)` with `g^j` the 2-point estimate at
/// `x^j` along a fresh direction from stream `(seed, j, t)`.
pub fn alg1_step(
    state: &mut SwarmState,
    queries: &ValueQueries<'_>,
    w: &MixingMatrix,
    schedule: &Schedule,
    seed: u64,
) -> Result<(), AlgorithmError> {
    check_shape(state, queries)?;
    let t = state.t + 1;
    let g = estimate_all(Estimator::TwoPoint { seed }, state, queries, schedule.u(t), t)?;
    let mut local = state.x.clone();
    local.axpy(-schedule.eta(t), &g);
    network::consensus_apply_into(w, &local, &mut state.x);
    check_finite(&state.x, t)?;
    state.g_prev = g;
    state.t = t;
    state.queries += 2;
    Ok(())
}

fn tracking_update(
    state: &mut SwarmState,
    g: AgentStack,
    w: &MixingMatrix,
    eta: f64,
    t: u64,
) -> Result<(), AlgorithmError> {
    // s ← W (s + g − g_prev)
    let mut pre = state.s.clone();
    pre.axpy(1.0, &g);
    pre.axpy(-1.0, &state.g_prev);
    network::consensus_apply_into(w, &pre, &mut state.s);
    // x ← W (x − η s)
    let mut local = state.x.clone();
    local.axpy(-eta, &state.s);
    network::consensus_apply_into(w, &local, &mut state.x);
    check_finite(&state.s, t)?;
    check_finite(&state.x, t)?;
    state.g_prev = g;
    state.t = t;
    Ok(())
}

/// Gradient tracking driven by the 2d-point estimator.
pub fn alg2_step(
    state: &mut SwarmState,
    queries: &ValueQueries<'_>,
    w: &MixingMatrix,
    schedule: &Schedule,
) -> Result<(), AlgorithmError> {
    check_shape(state, queries)?;
    let t = state.t + 1;
    let g = estimate_all(Estimator::Coordinate, state, queries, schedule.u(t), t)?;
    tracking_update(state, g, w, schedule.eta(t), t)?;
    state.queries += 2 * queries.dim() as u64;
    Ok(())
}

/// Gradient tracking driven by the 2-point estimator.
pub fn hybrid_step(
    state: &mut SwarmState,
    queries: &ValueQueries<'_>,
    w: &MixingMatrix,
    schedule: &Schedule,
    seed: u64,
) -> Result<(), AlgorithmError> {
    check_shape(state, queries)?;
    let t = state.t + 1;
    let g = estimate_all(Estimator::TwoPoint { seed }, state, queries, schedule.u(t), t)?;
    tracking_update(state, g, w, schedule.eta(t), t)?;
    state.queries += 2;
    Ok(())
}

/// Dispatches one iteration of `kernel`.
pub fn step(
    kernel: Kernel,
    state: &mut SwarmState,
    queries: &ValueQueries<'_>,
    w: &MixingMatrix,
    schedule: &Schedule,
    seed: u64,
) -> Result<(), AlgorithmError> {
    match kernel {
        Kernel::Alg1 => alg1_step(state, queries, w, schedule, seed),
        Kernel::Alg2 => alg2_step(state, queries, w, schedule),
        Kernel::Hybrid => hybrid_step(state, queries, w, schedule, seed),
    }
}
