//! Subcommands and file formats of the `dzo` binary.
//!
//! Exit codes: 0 success, 1 a check failed or an output could not be
//! written, 2 configuration error, 3 divergence.

pub mod checks;
pub mod config;
pub mod csv;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::info;

use crate::harness::experiment::{self, ExperimentOutcome, RunConfig};
use crate::harness::HarnessError;

pub use config::parse_config;
pub use csv::{format_float, parse_trace, write_summary, write_trace};
pub use manifest::render_manifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

/// Fallback output directory when neither `--out` nor `output` is set.
pub const OUTPUT_ENV: &str = "DZO_OUTPUT_DIR";

pub const TRACE_FILE: &str = "trace.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Parser)]
#[command(name = "dzo", version, about = "Decentralized zero-order optimization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration (or replay a manifest).
    Run {
        config: PathBuf,
        /// Output directory; overrides `output` and the environment.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in check: lemma1, bias, contraction, theorem3, theorem4, hybrid.
    Verify {
        which: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one configuration for several seeds.
    Sweep {
        config: PathBuf,
        /// Comma-separated seed list.
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, out } => cmd_run(&config, out.as_deref()),
        Command::Verify { which, samples, seed } => cmd_verify(&which, samples, seed),
        Command::Sweep { config, seeds, out } => cmd_sweep(&config, &seeds, out.as_deref()),
    }
}

fn report_config_error(e: &HarnessError) -> i32 {
    match e {
        HarnessError::Config { keys, message } if !keys.is_empty() => {
            eprintln!("configuration error: {message} [keys: {}]", keys.join(", "));
        }
        other => eprintln!("configuration error: {other}"),
    }
    EXIT_CONFIG
}

fn load_config(path: &Path) -> Result<RunConfig, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("configuration error: cannot read {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    parse_config(&text).map_err(|e| report_config_error(&e))
}

fn output_dir(flag: Option<&Path>, config: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_outputs(dir: &Path, outcome: &ExperimentOutcome) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MANIFEST_FILE), render_manifest(&outcome.experiment))?;
    fs::write(dir.join(TRACE_FILE), write_trace(outcome.trace()))
}

/// Exit code of a finished outcome, reporting divergence.
fn outcome_code(outcome: &ExperimentOutcome, label: &str) -> i32 {
    match &outcome.result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("{label}: run failed: {}", e.error);
            EXIT_DIVERGED
        }
    }
}

pub fn cmd_run(path: &Path, out: Option<&Path>) -> i32 {
    let config = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = output_dir(out, &config);
    let outcome = match experiment::run_experiment(config) {
        Ok(o) => o,
        Err(e) => return report_config_error(&e),
    };
    if let Err(e) = write_outputs(&dir, &outcome) {
        eprintln!("cannot write outputs to {}: {e}", dir.display());
        return EXIT_FAIL;
    }
    let code = outcome_code(&outcome, "run");
    info!("wrote {} rows to {}", outcome.trace().len(), dir.join(TRACE_FILE).display());
    code
}

pub fn cmd_verify(which: &str, samples: Option<usize>, seed: u64) -> i32 {
    let Some(result) = checks::run_check(which, samples, seed) else {
        eprintln!("unknown check {which:?}; expected one of {}", checks::CHECKS.join(", "));
        return EXIT_CONFIG;
    };
    match result {
        Ok(lines) => {
            let mut all = true;
            for l in &lines {
                println!("{l}");
                all &= l.verdict.is_pass();
            }
            if all {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("FAIL {which}: {e}");
            EXIT_FAIL
        }
    }
}

pub fn cmd_sweep(path: &Path, seeds: &[u64], out: Option<&Path>) -> i32 {
    if seeds.is_empty() {
        eprintln!("configuration error: need at least one seed [keys: seeds]");
        return EXIT_CONFIG;
    }
    let base = match load_config(path) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let dir = output_dir(out, &base);
    let configs: Vec<RunConfig> = seeds
        .iter()
        .map(|&seed| RunConfig {
            seed,
            ..base.clone()
        })
        .collect();
    let results = experiment::sweep(configs);

    let mut worst = EXIT_OK;
    let mut traces = Vec::new();
    for (seed, result) in seeds.iter().zip(&results) {
        let label = format!("seed {seed}");
        let code = match result {
            Err(e) => {
                eprint!("{label}: ");
                report_config_error(e)
            }
            Ok(outcome) => {
                let seed_dir = dir.join(format!("seed_{seed}"));
                if let Err(e) = write_outputs(&seed_dir, outcome) {
                    eprintln!("{label}: cannot write outputs to {}: {e}", seed_dir.display());
                    EXIT_FAIL
                } else {
                    let code = outcome_code(outcome, &label);
                    if code == EXIT_OK {
                        traces.push(outcome.trace());
                    }
                    code
                }
            }
        };
        worst = worst.max(code);
    }
    let summary = experiment::summarize(&traces);
    if let Err(e) = fs::create_dir_all(&dir).and_then(|_| fs::write(dir.join(SUMMARY_FILE), write_summary(&summary))) {
        eprintln!("cannot write {}: {e}", dir.join(SUMMARY_FILE).display());
        worst = worst.max(EXIT_FAIL);
    }
    println!(
        "{} of {} runs completed; summary in {}",
        traces.len(),
        seeds.len(),
        dir.join(SUMMARY_FILE).display()
    );
    worst
}
