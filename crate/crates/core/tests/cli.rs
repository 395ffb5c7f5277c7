use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dzo::algorithms::Kernel;
use dzo::cli::{parse_trace, write_trace};

fn dzo(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dzo"))
        .args(args)
        .current_dir(cwd)
        .env_remove("DZO_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

const SMALL: &str = "\
# small benchmark run
kernel = alg2
suite = paper
d = 4
n = 6
iterations = 60
graph = geometric
max_angle = 1.2
schedule = manual
eta_scale = 0.02
eta_exponent = 0
u_scale = 4
u_exponent = 0.75
seed = 5
";

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_trace_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    let out = dzo(&["run", &cfg, "--out", "a"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("a/trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,m,f_bar,grad_norm_sq,consensus_err,track_err,eta_t,u_t"));
    assert_eq!(csv.lines().count(), 62);
    assert!(csv.lines().last().unwrap().starts_with("60,480,"));
    let manifest = fs::read_to_string(dir.path().join("a/manifest.txt")).unwrap();
    for key in ["seed = 5", "graph.edges = ", "suite.xi.5 = ", "init.x.0 = ", "derived.rho = "] {
        assert!(manifest.contains(key), "missing {key}");
    }
}

#[test]
fn alg1_track_column_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", &SMALL.replace("alg2", "alg1"));
    assert_eq!(dzo(&["run", &cfg, "--out", "."], dir.path()).status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(5), Some(""));
    }
}

#[test]
fn rerun_and_replay_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    for sub in ["a", "b"] {
        assert_eq!(dzo(&["run", &cfg, "--out", sub], dir.path()).status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/trace.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/trace.csv")).unwrap());

    let manifest = dir.path().join("a/manifest.txt").to_string_lossy().into_owned();
    assert_eq!(dzo(&["run", &manifest, "--out", "c"], dir.path()).status.code(), Some(0));
    assert_eq!(a, fs::read(dir.path().join("c/trace.csv")).unwrap());
    // The replayed manifest is itself a fixed point.
    assert_eq!(
        fs::read(dir.path().join("a/manifest.txt")).unwrap(),
        fs::read(dir.path().join("c/manifest.txt")).unwrap()
    );
}

#[test]
fn emitted_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    assert_eq!(dzo(&["run", &cfg, "--out", "."], dir.path()).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(write_trace(&parse_trace(&text, Kernel::Alg2).unwrap()), text);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_dzo"))
        .args(["run", &cfg])
        .current_dir(dir.path())
        .env("DZO_OUTPUT_DIR", dir.path().join("env"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("env/trace.csv").exists());
}

#[test]
fn missing_seed_exits_2_naming_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", &SMALL.replace("seed = 5\n", ""));
    let out = dzo(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn config_errors_list_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", &format!("{SMALL}colour = red\n"));
    let out = dzo(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let cfg = write(dir.path(), "bad.cfg", &SMALL.replace("d = 4", "d = 0"));
    let out = dzo(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[keys: d]"));

    let cfg = write(dir.path(), "t4.cfg", "suite = paper\nd = 4\nn = 6\nschedule = theorem4\nseed = 5\n");
    let out = dzo(&["run", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu, smoothness"));
}

#[test]
fn divergence_exits_3_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kernel = alg2\nsuite = quadratic\nd = 2\nn = 4\ngraph = ring\niterations = 500\neta_scale = 1e200\neta_exponent = 0\nseed = 1\n";
    let cfg = write(dir.path(), "run.cfg", text);
    let out = dzo(&["run", &cfg, "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows = csv.lines().count() - 1;
    assert!((1..501).contains(&rows));
}

#[test]
fn verify_selectors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dzo(&["verify", "lemma1", "--samples", "20000", "--seed", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS lemma1"));
    let out = dzo(&["verify", "contraction"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 14);
    assert_eq!(dzo(&["verify", "bias"], dir.path()).status.code(), Some(0));
    assert_eq!(dzo(&["verify", "nonsense"], dir.path()).status.code(), Some(2));
    // Too few samples is a failed check, not a crash.
    assert_eq!(dzo(&["verify", "lemma1", "--samples", "10"], dir.path()).status.code(), Some(1));
}

#[test]
fn sweep_writes_members_and_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    let out = dzo(&["sweep", &cfg, "--seeds", "1,2,1", "--out", "sw"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let root = dir.path().join("sw");
    let a = fs::read(root.join("seed_1/trace.csv")).unwrap();
    assert_ne!(a, fs::read(root.join("seed_2/trace.csv")).unwrap());
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    let header = summary.lines().next().unwrap();
    assert_eq!(
        header,
        "t,m,f_bar_mean,f_bar_min,f_bar_max,grad_norm_sq_mean,grad_norm_sq_min,grad_norm_sq_max,\
consensus_err_mean,consensus_err_min,consensus_err_max,track_err_mean,track_err_min,track_err_max"
    );
    assert_eq!(summary.lines().count(), 62);
}

#[test]
fn single_seed_envelope_equals_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", SMALL);
    assert_eq!(dzo(&["sweep", &cfg, "--seeds", "9", "--out", "sw"], dir.path()).status.code(), Some(0));
    let trace = fs::read_to_string(dir.path().join("sw/seed_9/trace.csv")).unwrap();
    let summary = fs::read_to_string(dir.path().join("sw/summary.csv")).unwrap();
    for (t, s) in trace.lines().zip(summary.lines()).skip(1) {
        let t: Vec<&str> = t.split(',').collect();
        let s: Vec<&str> = s.split(',').collect();
        assert_eq!(&s[..2], &t[..2]);
        for (metric, col) in [(2, 2), (3, 5), (4, 8)] {
            assert_eq!(s[col], t[metric]);
            assert_eq!(s[col + 1], t[metric]);
            assert_eq!(s[col + 2], t[metric]);
        }
    }
}

#[test]
fn sweep_failure_is_recorded_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let text = "kernel = alg2\nsuite = quadratic\nd = 2\nn = 4\ngraph = ring\niterations = 50\neta_scale = 1e200\neta_exponent = 0\nseed = 1\n";
    let cfg = write(dir.path(), "run.cfg", text);
    let out = dzo(&["sweep", &cfg, "--seeds", "1,2", "--out", "sw"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.path().join("sw/seed_2/trace.csv").exists());
    assert!(dir.path().join("sw/summary.csv").exists());
}
