//! Typed run configuration, resolution into concrete inputs, and execution.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algorithms::{
    self, schedule_theorem1, schedule_theorem2, schedule_theorem3, schedule_theorem4, theorem4_lambda, Kernel,
    PowerDecay, RadiusRule, RunError, Schedule, ScheduleError,
};
use crate::network::{
    build_complete, build_geometric_sphere, build_path, build_ring, is_connected, lazy_metropolis_weights,
    metropolis_weights, Graph, MixingMatrix, NetworkError,
};
use crate::objectives::{
    make_paper_instance, make_quadratic_suite, make_random_quadratic_suite, paper_instance_from_params,
    ObjectiveSuite, PaperInstanceParams, SuiteConstants,
};
use crate::rng::{RngStream, SetupPurpose};
use crate::stack::AgentStack;

use super::trace::{Trace, TraceRow};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuiteSpec {
    /// Logistic-plus-log-barrier benchmark with freshly drawn parameters.
    Paper,
    /// `½‖x − c_i‖²` with `𝒩(0, center_scale²)` center coordinates.
    Quadratic { center_scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphSpec {
    Ring,
    Path,
    Complete,
    Geometric { max_angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightScheme {
    Metropolis,
    LazyMetropolis,
}

impl WeightScheme {
    pub fn name(self) -> &'static str {
        match self {
            WeightScheme::Metropolis => "metropolis",
            WeightScheme::LazyMetropolis => "lazy-metropolis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    Manual { step: PowerDecay, radius: RadiusRule },
    Theorem1 { alpha_eta: f64, alpha_u: f64, gamma: f64 },
    Theorem2 { alpha_eta: f64, alpha_u: f64 },
    Theorem3 { radius: RadiusRule },
    /// `lambda_tilde` defaults to `λ²`.
    Theorem4 { alpha: f64, u_scale: f64, lambda_tilde: Option<f64> },
}

/// Analytic constants supplied by the user for suites where they are
/// unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantOverrides {
    pub smoothness: Option<f64>,
    pub lipschitz: Option<f64>,
    pub mu: Option<f64>,
}

/// Stored inputs that replace the seeded draws, so a manifest replays
/// exactly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Replay {
    pub edges: Option<Vec<(usize, usize)>>,
    pub paper: Option<PaperInstanceParams>,
    pub centers: Option<Vec<Vec<f64>>>,
    pub x0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kernel: Kernel,
    pub suite: SuiteSpec,
    pub d: usize,
    pub n: usize,
    pub iterations: u64,
    pub graph: GraphSpec,
    pub weights: WeightScheme,
    pub schedule: ScheduleSpec,
    pub constants: ConstantOverrides,
    /// Initial iterates are i.i.d. `𝒩(0, init_variance / d)` per coordinate.
    pub init_variance: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub replay: Replay,
}

impl RunConfig {
    /// Defaults for everything except the seed.
    pub fn new(kernel: Kernel, d: usize, n: usize, iterations: u64, seed: u64) -> Self {
        Self {
            kernel,
            suite: SuiteSpec::Paper,
            d,
            n,
            iterations,
            graph: GraphSpec::Geometric {
                max_angle: std::f64::consts::FRAC_PI_4,
            },
            weights: WeightScheme::Metropolis,
            schedule: ScheduleSpec::Manual {
                step: PowerDecay {
                    scale: 0.02,
                    shift: 0.0,
                    exponent: 0.5,
                },
                radius: RadiusRule::Power(PowerDecay {
                    scale: 4.0,
                    shift: 0.0,
                    exponent: 0.5,
                }),
            },
            constants: ConstantOverrides::default(),
            init_variance: 25.0,
            seed,
            output: None,
            replay: Replay::default(),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.d == 0 {
            return Err(HarnessError::config(&["d"], "d must be at least 1"));
        }
        if self.n < 2 {
            return Err(HarnessError::config(&["n"], "n must be at least 2"));
        }
        if self.iterations == 0 || self.iterations > u64::from(u32::MAX) {
            return Err(HarnessError::config(&["iterations"], "iterations must lie in [1, 2^32)"));
        }
        if !(self.init_variance >= 0.0 && self.init_variance.is_finite()) {
            return Err(HarnessError::config(&["init_variance"], "must be finite and non-negative"));
        }
        if let SuiteSpec::Quadratic { center_scale } = self.suite {
            if !(center_scale >= 0.0 && center_scale.is_finite()) {
                return Err(HarnessError::config(&["center_scale"], "must be finite and non-negative"));
            }
        }
        let positive = |v: Option<f64>| v.is_none_or(|v| v > 0.0 && v.is_finite());
        if !positive(self.constants.smoothness) {
            return Err(HarnessError::config(&["smoothness"], "must be positive"));
        }
        if !positive(self.constants.lipschitz) {
            return Err(HarnessError::config(&["lipschitz"], "must be positive"));
        }
        if !positive(self.constants.mu) {
            return Err(HarnessError::config(&["mu"], "must be positive"));
        }
        Ok(())
    }
}

/// A configuration resolved into concrete graph, weights, objectives,
/// schedule and initial iterates.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: RunConfig,
    pub graph: Graph,
    pub w: MixingMatrix,
    pub suite: ObjectiveSuite,
    pub schedule: Schedule,
    pub x0: AgentStack,
}

impl Experiment {
    pub fn resolve(config: RunConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let graph = resolve_graph(&config)?;
        let w = match config.weights {
            WeightScheme::Metropolis => metropolis_weights(&graph),
            WeightScheme::LazyMetropolis => lazy_metropolis_weights(&graph),
        }?;
        let suite = resolve_suite(&config)?;
        let schedule = resolve_schedule(&config, suite.constants(), w.rho())?;
        let x0 = resolve_x0(&config)?;
        Ok(Self {
            config,
            graph,
            w,
            suite,
            schedule,
            x0,
        })
    }

    /// Runs the resolved experiment.
    pub fn run(&self) -> Result<Trace, RunError> {
        algorithms::run(
            self.config.kernel,
            &self.suite,
            &self.w,
            &self.schedule,
            self.x0.clone(),
            self.config.iterations,
            self.config.seed,
        )
    }
}

fn resolve_graph(config: &RunConfig) -> Result<Graph, HarnessError> {
    if let Some(edges) = &config.replay.edges {
        let g = Graph::from_edges(config.n, edges).map_err(|e| HarnessError::config(&["graph.edges"], e.to_string()))?;
        if !is_connected(&g) {
            return Err(HarnessError::config(&["graph.edges"], NetworkError::Disconnected.to_string()));
        }
        return Ok(g);
    }
    let n = config.n;
    Ok(match config.graph {
        GraphSpec::Ring => build_ring(n)?,
        GraphSpec::Path => build_path(n)?,
        GraphSpec::Complete => build_complete(n)?,
        GraphSpec::Geometric { max_angle } => {
            if !(max_angle > 0.0 && max_angle <= std::f64::consts::PI) {
                return Err(HarnessError::config(&["max_angle"], "must lie in (0, pi]"));
            }
            build_geometric_sphere(n, max_angle, RngStream::setup(config.seed, SetupPurpose::Graph))?
        }
    })
}

fn resolve_suite(config: &RunConfig) -> Result<ObjectiveSuite, HarnessError> {
    let (d, n) = (config.d, config.n);
    let suite = match config.suite {
        SuiteSpec::Paper => match &config.replay.paper {
            Some(p) => {
                let suite = paper_instance_from_params(p)?;
                if suite.dim() != d || suite.agents() != n {
                    return Err(HarnessError::config(&["suite.xi"], "stored parameters do not match d and n"));
                }
                suite
            }
            None => make_paper_instance(d, n, RngStream::setup(config.seed, SetupPurpose::Suite))?,
        },
        SuiteSpec::Quadratic { center_scale } => match &config.replay.centers {
            Some(c) => {
                if c.len() != n {
                    return Err(HarnessError::config(&["suite.centers"], "expected one center per agent"));
                }
                make_quadratic_suite(d, c)?
            }
            None => make_random_quadratic_suite(d, n, center_scale, RngStream::setup(config.seed, SetupPurpose::Suite))?,
        },
    };
    let known = *suite.constants();
    let over = config.constants;
    let merge = |key: &str, known: Option<f64>, given: Option<f64>| -> Result<Option<f64>, HarnessError> {
        match (known, given) {
            (Some(k), Some(g)) if k != g => Err(HarnessError::config(
                &[key],
                format!("suite has {key} = {k}; configured {g} conflicts"),
            )),
            (Some(k), _) => Ok(Some(k)),
            (None, g) => Ok(g),
        }
    };
    let constants = SuiteConstants {
        smoothness: merge("smoothness", known.smoothness, over.smoothness)?,
        lipschitz: merge("lipschitz", known.lipschitz, over.lipschitz)?,
        mu: merge("mu", known.mu, over.mu)?,
        ..known
    };
    Ok(suite.with_constants(constants))
}

fn schedule_error(e: ScheduleError) -> HarnessError {
    match &e {
        ScheduleError::InvalidParameter { name, .. } => {
            let key = match *name {
                "L" => "smoothness",
                "G" => "lipschitz",
                "u" => "u_scale",
                other => other,
            };
            HarnessError::config(&[key], e.to_string())
        }
        ScheduleError::NotSummable(_) => HarnessError::config(&["u_exponent"], e.to_string()),
    }
}

fn require(constants: &SuiteConstants, keys: &[&'static str]) -> Result<Vec<f64>, HarnessError> {
    let lookup = |k: &str| match k {
        "smoothness" => constants.smoothness,
        "lipschitz" => constants.lipschitz,
        "mu" => constants.mu,
        _ => None,
    };
    let missing: Vec<&str> = keys.iter().copied().filter(|k| lookup(k).is_none()).collect();
    if !missing.is_empty() {
        return Err(HarnessError::config(
            &missing,
            format!("schedule needs {} (unknown for this suite)", missing.join(", ")),
        ));
    }
    Ok(keys.iter().map(|k| lookup(k).expect("checked")).collect())
}

fn resolve_schedule(config: &RunConfig, constants: &SuiteConstants, rho: f64) -> Result<Schedule, HarnessError> {
    let d = config.d;
    let schedule = match config.schedule {
        ScheduleSpec::Manual { step, radius } => Schedule::manual(step, radius),
        ScheduleSpec::Theorem1 {
            alpha_eta,
            alpha_u,
            gamma,
        } => {
            let c = require(constants, &["smoothness", "lipschitz"])?;
            schedule_theorem1(c[0], d, alpha_eta, alpha_u, c[1], gamma)
        }
        ScheduleSpec::Theorem2 { alpha_eta, alpha_u } => {
            let c = require(constants, &["mu", "smoothness"])?;
            schedule_theorem2(c[0], c[1], d, rho, alpha_eta, alpha_u)
        }
        ScheduleSpec::Theorem3 { radius } => {
            let c = require(constants, &["smoothness"])?;
            schedule_theorem3(c[0], rho, radius)
        }
        ScheduleSpec::Theorem4 {
            alpha,
            u_scale,
            lambda_tilde,
        } => {
            let c = require(constants, &["mu", "smoothness"])?;
            let lambda_tilde = lambda_tilde.unwrap_or_else(|| theorem4_lambda(c[0], c[1], rho, alpha).powi(2));
            schedule_theorem4(c[0], c[1], rho, alpha, u_scale, lambda_tilde)
        }
    };
    schedule.map_err(schedule_error)
}

fn resolve_x0(config: &RunConfig) -> Result<AgentStack, HarnessError> {
    let (d, n) = (config.d, config.n);
    if let Some(rows) = &config.replay.x0 {
        return AgentStack::from_rows(rows)
            .filter(|s| s.rows() == n && s.dim() == d)
            .ok_or_else(|| HarnessError::config(&["init.x"], "stored initial points do not match d and n"));
    }
    let sd = (config.init_variance / d as f64).sqrt();
    let mut rng = RngStream::setup(config.seed, SetupPurpose::InitialPoints).generator();
    let mut x0 = AgentStack::zeros(n, d);
    for i in 0..n {
        for v in x0.row_mut(i) {
            *v = sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(x0)
}

/// A resolved experiment with the outcome of its run. On divergence the
/// error carries the rows recorded up to the failure.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub experiment: Experiment,
    pub result: Result<Trace, RunError>,
}

impl ExperimentOutcome {
    /// The completed trace, or the partial one on failure.
    pub fn trace(&self) -> &Trace {
        match &self.result {
            Ok(t) => t,
            Err(e) => &e.partial,
        }
    }
}

/// Resolves and runs one configuration. Only configuration problems are
/// reported as `Err`; run failures live in the outcome.
pub fn run_experiment(config: RunConfig) -> Result<ExperimentOutcome, HarnessError> {
    let experiment = Experiment::resolve(config)?;
    let result = experiment.run();
    Ok(ExperimentOutcome { experiment, result })
}

/// Runs the configurations in parallel; results keep the input order.
pub fn sweep(configs: Vec<RunConfig>) -> Vec<Result<ExperimentOutcome, HarnessError>> {
    configs.into_par_iter().map(run_experiment).collect()
}

/// Mean and envelope of one metric across traces at one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Envelope {
    fn of(values: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut sum, mut min, mut max, mut count) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0usize);
        for v in values {
            sum += v;
            min = min.min(v);
            max = max.max(v);
            count += 1;
        }
        (count > 0).then(|| Envelope {
            mean: sum / count as f64,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub t: u64,
    pub m: u64,
    pub f_bar: Envelope,
    pub grad_norm_sq: Envelope,
    pub consensus_err: Envelope,
    pub track_err: Option<Envelope>,
}

/// Per-row envelope over traces of the same configuration, truncated to the
/// shortest trace.
pub fn summarize(traces: &[&Trace]) -> Vec<SummaryRow> {
    let Some(len) = traces.iter().map(|t| t.rows.len()).min() else {
        return Vec::new();
    };
    (0..len)
        .map(|k| {
            let rows: Vec<&TraceRow> = traces.iter().map(|t| &t.rows[k]).collect();
            let metric = |f: fn(&TraceRow) -> f64| Envelope::of(rows.iter().map(|r| f(r))).expect("non-empty");
            let track = if rows.iter().all(|r| r.track_err.is_some()) {
                Envelope::of(rows.iter().filter_map(|r| r.track_err))
            } else {
                None
            };
            SummaryRow {
                t: rows[0].t,
                m: rows[0].m,
                f_bar: metric(|r| r.f_bar),
                grad_norm_sq: metric(|r| r.grad_norm_sq),
                consensus_err: metric(|r| r.consensus_err),
                track_err: track,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_config(seed: u64) -> RunConfig {
        let mut c = RunConfig::new(Kernel::Alg2, 3, 5, 50, seed);
        c.suite = SuiteSpec::Quadratic { center_scale: 1.0 };
        c.graph = GraphSpec::Ring;
        c.schedule = ScheduleSpec::Theorem3 {
            radius: RadiusRule::Power(PowerDecay {
                scale: 0.1,
                shift: 0.0,
                exponent: 1.0,
            }),
        };
        c
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run_experiment(quadratic_config(4)).unwrap();
        let b = run_experiment(quadratic_config(4)).unwrap();
        assert_eq!(a.result.unwrap(), b.result.unwrap());
    }

    #[test]
    fn seeds_change_the_instance() {
        let a = run_experiment(quadratic_config(4)).unwrap();
        let b = run_experiment(quadratic_config(5)).unwrap();
        assert_ne!(a.experiment.x0, b.experiment.x0);
    }

    #[test]
    fn unknown_constants_are_reported_by_key() {
        let mut c = RunConfig::new(Kernel::Alg2, 3, 5, 10, 1);
        c.schedule = ScheduleSpec::Theorem4 {
            alpha: 1.0,
            u_scale: 1.0,
            lambda_tilde: None,
        };
        match Experiment::resolve(c) {
            Err(HarnessError::Config { keys, .. }) => assert_eq!(keys, vec!["mu", "smoothness"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_trace_envelope_is_the_trace() {
        let out = run_experiment(quadratic_config(2)).unwrap();
        let trace = out.result.unwrap();
        let summary = summarize(&[&trace]);
        assert_eq!(summary.len(), trace.rows.len());
        for (s, r) in summary.iter().zip(&trace.rows) {
            assert_eq!(s.f_bar.mean, r.f_bar);
            assert_eq!(s.f_bar.min, r.f_bar);
            assert_eq!(s.consensus_err.max, r.consensus_err);
        }
    }

    #[test]
    fn sweep_keeps_order() {
        let results = sweep(vec![quadratic_config(1), quadratic_config(2), quadratic_config(1)]);
        let traces: Vec<Trace> = results.into_iter().map(|r| r.unwrap().result.unwrap()).collect();
        assert_eq!(traces[0], traces[2]);
        assert_ne!(traces[0], traces[1]);
    }
}
