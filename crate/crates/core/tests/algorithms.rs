use dzo::algorithms::{self, run, Kernel, PowerDecay, RadiusRule, Schedule, SwarmState};
use dzo::harness::experiment::{run_experiment, RunConfig, ScheduleSpec};
use dzo::network::{build_ring, metropolis_weights};
use dzo::objectives::make_quadratic_suite;
use dzo::stack::AgentStack;

fn benchmark(kernel: Kernel, iterations: u64, seed: u64) -> RunConfig {
    let mut c = RunConfig::new(kernel, 16, 20, iterations, seed);
    c.schedule = ScheduleSpec::Manual {
        step: PowerDecay::constant(0.02),
        radius: RadiusRule::Power(PowerDecay {
            scale: 4.0,
            shift: 0.0,
            exponent: 0.75,
        }),
    };
    c
}

#[test]
fn query_counts_per_kernel() {
    for (kernel, per_step) in [(Kernel::Alg1, 2), (Kernel::Alg2, 32), (Kernel::Hybrid, 2)] {
        let out = run_experiment(benchmark(kernel, 25, 1)).unwrap();
        let trace = out.result.unwrap();
        assert_eq!(trace.len(), 26);
        for r in &trace.rows {
            assert_eq!(r.m, per_step * r.t);
            assert!(r.f_bar.is_finite() && r.grad_norm_sq.is_finite() && r.consensus_err.is_finite());
            assert_eq!(r.track_err.is_some(), kernel != Kernel::Alg1 && r.t > 0);
            assert_eq!(r.eta_t.is_some(), r.t > 0);
        }
    }
}

#[test]
fn identical_seeds_give_identical_traces() {
    for kernel in [Kernel::Alg1, Kernel::Alg2, Kernel::Hybrid] {
        let a = run_experiment(benchmark(kernel, 40, 3)).unwrap().result.unwrap();
        let b = run_experiment(benchmark(kernel, 40, 3)).unwrap().result.unwrap();
        assert_eq!(a, b);
        let c = run_experiment(benchmark(kernel, 40, 4)).unwrap().result.unwrap();
        assert_ne!(a, c);
    }
}

#[test]
fn tracking_identities_on_benchmark() {
    let out = run_experiment(benchmark(Kernel::Alg2, 1, 7)).unwrap();
    let e = out.experiment;
    let queries = e.suite.queries();
    let mut state = SwarmState::new(e.x0.clone());
    for _ in 0..300 {
        let prev = state.mean_x();
        algorithms::step(Kernel::Alg2, &mut state, &queries, &e.w, &e.schedule, 7).unwrap();
        let (s, g, x) = (state.s.mean(), state.g_prev.mean(), state.mean_x());
        for k in 0..e.suite.dim() {
            assert!((s[k] - g[k]).abs() <= 1e-10);
            assert!((x[k] - (prev[k] - e.schedule.eta(state.t) * g[k])).abs() <= 1e-10);
        }
    }
}

#[test]
fn divergence_keeps_partial_trace() {
    let centers = vec![vec![1.0], vec![-1.0], vec![2.0], vec![0.0]];
    let suite = make_quadratic_suite(1, &centers).unwrap();
    let w = metropolis_weights(&build_ring(4).unwrap()).unwrap();
    let schedule = Schedule::manual(PowerDecay::constant(1e200), RadiusRule::Power(PowerDecay::constant(0.1))).unwrap();
    let x0 = AgentStack::from_rows(&centers).unwrap();
    let err = run(Kernel::Alg2, &suite, &w, &schedule, x0, 10_000, 0).unwrap_err();
    // The first step lands near 1e200, where ½x² overflows.
    assert!(
        matches!(
            err.error,
            algorithms::AlgorithmError::Divergence { .. } | algorithms::AlgorithmError::Evaluation { .. }
        ),
        "{err}"
    );
    assert!(!err.partial.is_empty());
    assert!(err.partial.len() < 10_001);
}

#[test]
fn alg2_converges_linearly_on_quadratics_to_consensus() {
    let centers: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, -(i as f64) * 0.5]).collect();
    let suite = make_quadratic_suite(2, &centers).unwrap();
    let w = metropolis_weights(&build_ring(6).unwrap()).unwrap();
    let schedule = Schedule::manual(
        PowerDecay::constant(0.1),
        RadiusRule::Geometric { scale: 1.0, ratio: 0.9 },
    )
    .unwrap();
    let x0 = AgentStack::zeros(6, 2);
    let trace = run(Kernel::Alg2, &suite, &w, &schedule, x0, 400, 0).unwrap();
    let last = trace.last().unwrap();
    let f_star = suite.constants().f_star.unwrap();
    assert!(last.f_bar - f_star < 1e-12);
    assert!(last.consensus_err < 1e-12);
    assert!(last.track_err.unwrap() < 1e-12);
}
