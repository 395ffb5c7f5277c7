//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! run with `--nocapture` to see them when everything passes.

use std::time::{Duration, Instant};

use dzo::algorithms::{self, Kernel, PowerDecay, RadiusRule, SwarmState};
use dzo::cli::checks;
use dzo::cli::{parse_config, render_manifest, write_trace};
use dzo::estimators::{estimate_2d_point, estimate_smoothed_gradient_mc, Probe};
use dzo::harness::experiment::{run_experiment, sweep, RunConfig, ScheduleSpec};
use dzo::harness::verify::{scaled_consensus_growth, window_means, MeanEstimate, STD_ERR_THRESHOLD};
use dzo::harness::{Trace, Verdict};
use dzo::rng::{RngStream, SetupPurpose};
use dzo::stack;

struct Outcome {
    id: u8,
    pass: bool,
    detail: String,
}

fn timed(id: u8, limit: Option<Duration>, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (mut pass, mut detail) = body();
    let elapsed = start.elapsed();
    detail.push_str(&format!(" [{:.2} s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        detail.push_str(&format!(", limit {} s", limit.as_secs()));
        if elapsed > limit {
            pass = false;
            detail.push_str(", too slow");
        }
    }
    detail.push(']');
    let outcome = Outcome { id, pass, detail };
    println!(
        "{} criterion {}: {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.id,
        outcome.detail
    );
    outcome
}

fn mixing_suite() -> (bool, String) {
    let lines = checks::contraction(Some(100), 0).expect("mixing suite");
    let failed: Vec<String> = lines.iter().filter(|l| !l.verdict.is_pass()).map(|l| l.to_string()).collect();
    (
        failed.is_empty() && lines.len() == 14,
        if failed.is_empty() {
            format!("{} matrices stochastic, patterned, rho < 1 and contracting", lines.len())
        } else {
            failed.join("; ")
        },
    )
}

fn estimator_suite() -> (bool, String) {
    let mut notes = Vec::new();
    let mut pass = true;

    // Central differences reproduce quadratic gradients exactly.
    let mut r = RngStream::setup(1, SetupPurpose::Verification).generator();
    let mut worst_quadratic = 0.0f64;
    for _ in 0..5 {
        let d = 6;
        let a: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rand::Rng::random_range(&mut r, -1.0..1.0)).collect())
            .collect();
        let q: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| a[i][j] + a[j][i]).collect()).collect();
        let b: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut r, -2.0..2.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut r, -3.0..3.0)).collect();
        let f = |x: &[f64]| {
            let qx: Vec<f64> = q.iter().map(|row| stack::dot(row, x)).collect();
            0.5 * stack::dot(x, &qx) + stack::dot(&b, x)
        };
        let grad: Vec<f64> = q.iter().zip(&b).map(|(row, bi)| stack::dot(row, &x) + bi).collect();
        let mut probe = Probe::new(f);
        for u in [1.0, 0.1, 0.01] {
            let est = estimate_2d_point(&mut probe, &x, u).unwrap();
            worst_quadratic = worst_quadratic.max(stack::distance_sq(&est, &grad).sqrt());
        }
    }
    pass &= worst_quadratic <= 1e-10;
    notes.push(format!("quadratic error {worst_quadratic:.2e}"));

    let bias = checks::bias().expect("bias check");
    let cubic = bias[0].1.rows[0];
    let cubic_ok = cubic.u == 0.1 && (cubic.error - 0.01).abs() <= 1e-12 && cubic.error <= cubic.bound;
    pass &= cubic_ok && bias.iter().all(|(_, r)| r.verdict == Verdict::Pass);
    notes.push(format!("cubic error {:.6} <= {:.2}", cubic.error, cubic.bound));

    let g = [1.5, -0.5, 2.0, 0.0, -1.0, 0.25, 3.0, -2.0];
    let x = [0.1, 0.2, -0.3, 0.4, 0.0, 1.0, -1.0, 0.5];
    let mut probe = Probe::new(|x: &[f64]| stack::dot(&g, x) - 4.0);
    let mut r = RngStream::setup(2, SetupPurpose::Verification).generator();
    let est = estimate_smoothed_gradient_mc(&mut probe, &x, 0.5, 100_000, &mut r).unwrap();
    let worst_z = (0..g.len())
        .map(|k| (est.mean[k] - g[k]).abs() / est.std_err[k])
        .fold(0.0, f64::max);
    let mc_ok = (0..g.len()).all(|k| {
        MeanEstimate {
            mean: est.mean[k],
            std_err: est.std_err[k],
        }
        .agrees_with(g[k], STD_ERR_THRESHOLD)
    });
    pass &= mc_ok;
    notes.push(format!("2-point mean within {worst_z:.2} stderr"));
    (pass, notes.join("; "))
}

fn lemma1() -> (bool, String) {
    let r = checks::lemma1(Some(100_000), 0).expect("lemma1");
    (r.verdict == Verdict::Pass, r.to_string())
}

fn tracking_invariants() -> (bool, String) {
    let mut config = RunConfig::new(Kernel::Alg2, 16, 20, 1, 11);
    config.schedule = ScheduleSpec::Manual {
        step: PowerDecay::constant(0.02),
        radius: RadiusRule::Power(PowerDecay {
            scale: 4.0,
            shift: 0.0,
            exponent: 0.75,
        }),
    };
    let e = run_experiment(config).expect("config").experiment;
    let queries = e.suite.queries();
    let mut state = SwarmState::new(e.x0.clone());
    let (mut track_gap, mut descent_gap) = (0.0f64, 0.0f64);
    for _ in 0..2000 {
        let prev = state.mean_x();
        algorithms::step(Kernel::Alg2, &mut state, &queries, &e.w, &e.schedule, 11).expect("step");
        let (s, g, x) = (state.s.mean(), state.g_prev.mean(), state.mean_x());
        let eta = e.schedule.eta(state.t);
        for k in 0..e.suite.dim() {
            track_gap = track_gap.max((s[k] - g[k]).abs());
            descent_gap = descent_gap.max((x[k] - (prev[k] - eta * g[k])).abs());
        }
    }
    (
        track_gap <= 1e-10 && descent_gap <= 1e-10,
        format!("max |mean s - mean g| {track_gap:.2e}, max mean-descent residual {descent_gap:.2e} over 2000 steps"),
    )
}

fn theorem3() -> (bool, String) {
    let r = checks::theorem3(0).expect("theorem3");
    (r.verdict == Verdict::Pass && r.margin() >= 0.0, format!("{r}").replace('\n', " "))
}

fn theorem4() -> (bool, String) {
    let r = checks::theorem4(0).expect("theorem4");
    (r.verdict == Verdict::Pass, r.to_string())
}

fn hybrid() -> (bool, String) {
    let r = checks::hybrid(0).expect("hybrid");
    (r.verdict == Verdict::Pass, r.to_string())
}

const BUDGET: u64 = 30_000;

fn benchmark(kernel: Kernel, seed: u64) -> RunConfig {
    let d = 64;
    let per_step = if kernel == Kernel::Alg1 { 2 } else { 2 * d as u64 };
    let mut c = RunConfig::new(kernel, d, 50, BUDGET / per_step, seed);
    if kernel == Kernel::Alg2 {
        c.schedule = ScheduleSpec::Manual {
            step: PowerDecay::constant(0.02),
            radius: RadiusRule::Power(PowerDecay {
                scale: 4.0,
                shift: 0.0,
                exponent: 0.75,
            }),
        };
    }
    c
}

fn decreases(t: &Trace) -> bool {
    let (g0, g1) = window_means(t, 0.1, |r| r.grad_norm_sq);
    let (c0, c1) = window_means(t, 0.1, |r| r.consensus_err);
    g1 < g0 && c1 < c0
}

fn qualitative() -> (bool, String) {
    let seeds: Vec<u64> = (0..5).collect();
    let configs: Vec<RunConfig> = seeds
        .iter()
        .flat_map(|&s| [benchmark(Kernel::Alg1, s), benchmark(Kernel::Alg2, s)])
        .collect();
    let outcomes = sweep(configs);
    let mut notes = Vec::new();
    let (mut completes, mut decile, mut crossover) = (true, true, 0usize);
    let (mut alg1_mean, mut alg2_mean) = (0.0, 0.0);
    for (k, pair) in outcomes.chunks(2).enumerate() {
        let runs: Vec<&Trace> = match pair.iter().map(|o| o.as_ref().ok().and_then(|o| o.result.as_ref().ok())).collect::<Option<Vec<_>>>() {
            Some(r) => r,
            None => {
                completes = false;
                notes.push(format!("seed {k} did not complete"));
                continue;
            }
        };
        let (a1, a2) = (runs[0], runs[1]);
        let (l1, l2) = (a1.last().unwrap(), a2.last().unwrap());
        assert!(l1.m <= BUDGET && l2.m <= BUDGET);
        decile &= decreases(a1) && decreases(a2);
        alg1_mean += l1.consensus_err / seeds.len() as f64;
        alg2_mean += l2.consensus_err / seeds.len() as f64;
        if l2.consensus_err < l1.consensus_err {
            crossover += 1;
        }
        notes.push(format!(
            "seed {k}: consensus alg1 {:.3e} (m {}) vs alg2 {:.3e} (m {}), grad alg1 {:.3e} vs alg2 {:.3e}, alg1 t*consensus growth {:.3}",
            l1.consensus_err,
            l1.m,
            l2.consensus_err,
            l2.m,
            l1.grad_norm_sq,
            l2.grad_norm_sq,
            scaled_consensus_growth(a1)
        ));
    }
    let pass = completes && decile && crossover == seeds.len();
    let summary = format!(
        "completed {completes}, decile decrease {decile}, alg2 consensus below alg1 on {crossover}/{} seeds (means {alg1_mean:.3e} vs {alg2_mean:.3e})",
        seeds.len()
    );
    (pass, format!("{summary}; {}", notes.join("; ")))
}

fn determinism() -> (bool, String) {
    let configs = [
        "kernel = alg2\nd = 6\nn = 8\niterations = 150\neta_scale = 0.02\neta_exponent = 0\nu_scale = 4\nu_exponent = 0.75\nseed = 3\n",
        "kernel = alg1\nd = 5\nn = 7\niterations = 300\nseed = 4\n",
        "kernel = hybrid\nd = 4\nn = 9\ngraph = path\nweights = lazy-metropolis\niterations = 200\neta_scale = 2e-4\neta_exponent = 0\nseed = 8\n",
        "kernel = alg2\nsuite = quadratic\nd = 8\nn = 8\ngraph = ring\nschedule = theorem4\niterations = 300\nseed = 1\n",
        "kernel = alg2\nsuite = quadratic\nd = 8\nn = 10\ngraph = ring\nschedule = theorem3\niterations = 300\nseed = 2\n",
    ];
    for text in configs {
        let first = run_experiment(parse_config(text).expect("config")).expect("resolve");
        let trace = write_trace(first.trace());
        let manifest = render_manifest(&first.experiment);
        let replay = run_experiment(parse_config(&manifest).expect("manifest parses")).expect("resolve");
        if write_trace(replay.trace()) != trace || render_manifest(&replay.experiment) != manifest {
            return (false, format!("replay differs for:\n{text}"));
        }
    }
    (true, format!("{} manifests replay to byte-identical traces", configs.len()))
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let outcomes = [
        timed(1, Some(secs(1)), mixing_suite),
        timed(2, Some(secs(5)), estimator_suite),
        timed(3, Some(secs(5)), lemma1),
        timed(4, None, tracking_invariants),
        timed(5, Some(secs(10)), theorem3),
        timed(6, Some(secs(10)), theorem4),
        timed(7, Some(secs(20)), hybrid),
        timed(8, Some(secs(300)), qualitative),
        timed(9, None, determinism),
    ];
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
