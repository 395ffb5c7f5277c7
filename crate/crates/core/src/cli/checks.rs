//! Default configurations behind `dzo verify <which>`.

use std::f64::consts::FRAC_PI_4;

use crate::algorithms::{Kernel, PowerDecay, RadiusRule};
use crate::harness::bounds::{evaluate_theorem3_bound, evaluate_theorem4_rate, RateReport, TheoremBoundReport};
use crate::harness::experiment::{run_experiment, Experiment, GraphSpec, RunConfig, ScheduleSpec, SuiteSpec, WeightScheme};
use crate::harness::verify::{
    verify_contraction, verify_estimator_bias, verify_hybrid_nonvanishing, verify_lemma1, verify_mixing_matrix,
    BiasReport, HybridReport, Lemma1Report,
};
use crate::harness::{HarnessError, Trace, Verdict};
use crate::network::{
    build_geometric_sphere, build_path, build_ring, lazy_metropolis_weights, metropolis_weights, Graph,
};
use crate::rng::{RngStream, SetupPurpose};

/// One named check outcome.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", self.verdict, self.name, self.detail.trim_end())
    }
}

fn line(name: impl Into<String>, verdict: Verdict, detail: impl ToString) -> CheckLine {
    CheckLine {
        name: name.into(),
        verdict,
        detail: detail.to_string(),
    }
}

pub const LEMMA1_DIM: usize = 16;
pub const LEMMA1_SAMPLES: usize = 100_000;

/// Linear `f(x) = e₁ᵀx` in `d = 16`.
pub fn lemma1(samples: Option<usize>, seed: u64) -> Result<Lemma1Report, HarnessError> {
    let mut g = vec![0.0; LEMMA1_DIM];
    g[0] = 1.0;
    verify_lemma1(LEMMA1_DIM, &g, samples.unwrap_or(LEMMA1_SAMPLES), seed)
}

/// Cubic `x³` at `x = 1` (`L = 12` on `|x| ≤ 2`) and a 4-d quadratic.
pub fn bias() -> Result<Vec<(String, BiasReport)>, HarnessError> {
    let cubic = verify_estimator_bias(|x: &[f64]| x[0].powi(3), &[3.0], &[1.0], &[0.1, 0.05, 0.025], 12.0)?;
    let x = [0.5, -1.0, 2.0, 0.25];
    let quad = verify_estimator_bias(
        |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>() + x[0] * x[1],
        &[x[0] + x[1], x[1] + x[0], x[2], x[3]],
        &x,
        &[1.0, 0.1, 0.01],
        2.0,
    )?;
    Ok(vec![("cubic d=1".into(), cubic), ("quadratic d=4".into(), quad)])
}

/// The graphs of the mixing-matrix suite: ring(4), path(3) and five
/// geometric graphs with `n = 50`, angle `π/4`.
pub fn mixing_graphs() -> Result<Vec<(String, Graph)>, HarnessError> {
    let mut graphs = vec![("ring(4)".to_string(), build_ring(4)?), ("path(3)".to_string(), build_path(3)?)];
    for seed in 0..5 {
        let g = build_geometric_sphere(50, FRAC_PI_4, RngStream::setup(seed, SetupPurpose::Graph))?;
        graphs.push((format!("geometric(50, seed {seed})"), g));
    }
    Ok(graphs)
}

/// Mixing-matrix properties and contraction for both weight schemes on
/// every graph of [`mixing_graphs`].
pub fn contraction(trials: Option<usize>, seed: u64) -> Result<Vec<CheckLine>, HarnessError> {
    let trials = trials.unwrap_or(100);
    let mut lines = Vec::new();
    for (name, g) in mixing_graphs()? {
        for (scheme, w) in [("metropolis", metropolis_weights(&g)?), ("lazy", lazy_metropolis_weights(&g)?)] {
            let m = verify_mixing_matrix(&w, &g);
            let c = verify_contraction(&w, 5, trials, seed);
            let verdict = if m.verdict.is_pass() && c.verdict.is_pass() {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            lines.push(line(format!("{scheme} {name}"), verdict, format!("{m}; {c}")));
        }
    }
    Ok(lines)
}

/// Quadratic suite, `d = 8`, `n = 10`, ring, `η` at the admissible ceiling,
/// `u_t = 0.1/t`, 5000 iterations.
pub fn theorem3_config(seed: u64) -> RunConfig {
    let mut c = RunConfig::new(Kernel::Alg2, 8, 10, 5000, seed);
    c.suite = SuiteSpec::Quadratic { center_scale: 1.0 };
    c.graph = GraphSpec::Ring;
    c.weights = WeightScheme::Metropolis;
    c.schedule = ScheduleSpec::Theorem3 {
        radius: RadiusRule::Power(PowerDecay {
            scale: 0.1,
            shift: 0.0,
            exponent: 1.0,
        }),
    };
    c
}

fn completed(config: RunConfig) -> Result<(Experiment, Trace), HarnessError> {
    let out = run_experiment(config)?;
    match out.result {
        Ok(trace) => Ok((out.experiment, trace)),
        Err(e) => Err(HarnessError::Run(Box::new(e))),
    }
}

pub fn theorem3(seed: u64) -> Result<TheoremBoundReport, HarnessError> {
    let (e, trace) = completed(theorem3_config(seed))?;
    evaluate_theorem3_bound(&trace, &e.suite, e.w.rho(), &e.schedule, &e.x0, 0.0)
}

/// Quadratic suite (`μ = L = 1`), `d = 8`, ring with `n = 8`, `α = 1`,
/// `u_t = λ̃^{t/2}` with `λ̃ = λ²`, 2000 iterations.
pub fn theorem4_config(seed: u64) -> RunConfig {
    let mut c = RunConfig::new(Kernel::Alg2, 8, 8, 2000, seed);
    c.suite = SuiteSpec::Quadratic { center_scale: 1.0 };
    c.graph = GraphSpec::Ring;
    c.schedule = ScheduleSpec::Theorem4 {
        alpha: 1.0,
        u_scale: 1.0,
        lambda_tilde: None,
    };
    c
}

pub fn theorem4(seed: u64) -> Result<RateReport, HarnessError> {
    let (e, trace) = completed(theorem4_config(seed))?;
    let lambda = match e.schedule.kind {
        crate::algorithms::ScheduleKind::Theorem4 { lambda, .. } => lambda,
        _ => unreachable!("theorem4 config"),
    };
    let f_star = e.suite.constants().f_star.expect("quadratic suite");
    Ok(evaluate_theorem4_rate(&trace, f_star, lambda, 0.01))
}

/// Benchmark instance, `d = 16`, `n = 20`, geometric graph, 3000
/// iterations with `u_t = 4/t^{3/4}`; `η = 0.02` for the 2d-point tracking
/// run and [`HYBRID_STEP`] for the 2-point one.
pub fn hybrid_configs(seed: u64) -> (RunConfig, RunConfig) {
    let radius = RadiusRule::Power(PowerDecay {
        scale: 4.0,
        shift: 0.0,
        exponent: 0.75,
    });
    let mut alg2 = RunConfig::new(Kernel::Alg2, 16, 20, 3000, seed);
    alg2.schedule = ScheduleSpec::Manual {
        step: PowerDecay::constant(0.02),
        radius,
    };
    let mut hybrid = alg2.clone();
    hybrid.kernel = Kernel::Hybrid;
    hybrid.schedule = ScheduleSpec::Manual {
        step: PowerDecay::constant(HYBRID_STEP),
        radius,
    };
    (alg2, hybrid)
}

/// Constant step of the 2-point tracking run.
pub const HYBRID_STEP: f64 = 2e-4;

pub fn hybrid(seed: u64) -> Result<HybridReport, HarnessError> {
    let (a, h) = hybrid_configs(seed);
    let d = a.d;
    let (_, alg2) = completed(a)?;
    let (_, hyb) = completed(h)?;
    verify_hybrid_nonvanishing(&alg2, &hyb, d)
}

/// Runs the selected check and returns its report lines.
pub fn run_check(which: &str, samples: Option<usize>, seed: u64) -> Option<Result<Vec<CheckLine>, HarnessError>> {
    let result = match which {
        "lemma1" => lemma1(samples, seed).map(|r| vec![line("lemma1", r.verdict, r)]),
        "bias" => bias().map(|rs| rs.into_iter().map(|(n, r)| line(n, r.verdict, r)).collect()),
        "contraction" => contraction(samples, seed),
        "theorem3" => theorem3(seed).map(|r| vec![line("theorem3", r.verdict, r)]),
        "theorem4" => theorem4(seed).map(|r| vec![line("theorem4", r.verdict, r)]),
        "hybrid" => hybrid(seed).map(|r| vec![line("hybrid", r.verdict, r)]),
        _ => return None,
    };
    Some(result)
}

pub const CHECKS: [&str; 6] = ["lemma1", "bias", "contraction", "theorem3", "theorem4", "hybrid"];
