//! Metrics, traces, checks of the convergence guarantees and experiment
//! orchestration.

pub mod bounds;
pub mod experiment;
pub mod metrics;
pub mod trace;
pub mod verify;

use std::fmt;

use thiserror::Error;

use crate::algorithms::{RunError, ScheduleError};
use crate::estimators::EstimatorError;
use crate::network::NetworkError;
use crate::objectives::ObjectiveError;

pub use bounds::{evaluate_theorem3_bound, evaluate_theorem4_rate, RateReport, TheoremBoundReport};
pub use experiment::{run_experiment, sweep, Experiment, ExperimentOutcome, RunConfig};
pub use trace::{Trace, TraceRow};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("configuration error: {message}")]
    Config { keys: Vec<String>, message: String },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("run failed: {0}")]
    Run(#[from] Box<RunError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn config(keys: &[&str], message: impl Into<String>) -> Self {
        HarnessError::Config {
            keys: keys.iter().map(|k| k.to_string()).collect(),
            message: message.into(),
        }
    }
}

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The measurement cannot separate the hypotheses.
    Inconclusive,
    /// The configuration lies outside the hypotheses of the guarantee.
    NotCovered,
    /// The check cannot be evaluated on this input.
    NotApplicable,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::NotCovered => "NOT-COVERED",
            Verdict::NotApplicable => "NOT-APPLICABLE",
        })
    }
}
