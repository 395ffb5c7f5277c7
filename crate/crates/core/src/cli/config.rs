//! `key = value` run configuration.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Keys
//! prefixed `derived.` are informational and skipped on input. Vectors are
//! space-separated numbers, edges are `i-j` tokens.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::algorithms::{Kernel, PowerDecay, RadiusRule};
use crate::harness::experiment::{
    ConstantOverrides, GraphSpec, Replay, RunConfig, ScheduleSpec, SuiteSpec, WeightScheme,
};
use crate::harness::HarnessError;
use crate::objectives::PaperInstanceParams;

/// Raw pairs in file order of first appearance, with use tracking.
struct Pairs {
    map: BTreeMap<String, String>,
    used: Vec<String>,
}

impl Pairs {
    fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::config(&[line], format!("line {}: expected `key = value`", k + 1)));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(HarnessError::config(&[], format!("line {}: empty key", k + 1)));
            }
            if key.starts_with("derived.") {
                continue;
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(HarnessError::config(&[&key], format!("line {}: duplicate key", k + 1)));
            }
        }
        Ok(Self { map, used: Vec::new() })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let v = self.map.remove(key);
        if v.is_some() {
            self.used.push(key.to_string());
        }
        v
    }

    fn parse_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| HarnessError::config(&[key], format!("{key} = {v:?}: {e}"))),
        }
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, HarnessError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    fn vector(&mut self, key: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        let Some(v) = self.take(key) else { return Ok(None) };
        v.split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
            .map_err(|e| HarnessError::config(&[key], format!("{key}: {e}")))
    }

    /// `prefix.0`, `prefix.1`, … up to `count`; all or none must be present.
    fn indexed_vectors(&mut self, prefix: &str, count: usize) -> Result<Option<Vec<Vec<f64>>>, HarnessError> {
        let first = format!("{prefix}.0");
        if !self.map.contains_key(&first) {
            return Ok(None);
        }
        let mut rows = Vec::with_capacity(count);
        for i in 0..count {
            let key = format!("{prefix}.{i}");
            match self.vector(&key)? {
                Some(r) => rows.push(r),
                None => return Err(HarnessError::config(&[&key], format!("missing {key}"))),
            }
        }
        Ok(Some(rows))
    }

    fn finish(self) -> Result<(), HarnessError> {
        if self.map.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
        Err(HarnessError::config(&keys, format!("unknown keys: {}", keys.join(", "))))
    }
}

fn choice<'a>(key: &str, value: &str, allowed: &[&'a str]) -> Result<&'a str, HarnessError> {
    allowed.iter().copied().find(|a| *a == value).ok_or_else(|| {
        HarnessError::config(&[key], format!("{key} = {value:?}; expected one of {}", allowed.join(", ")))
    })
}

fn parse_edges(text: &str) -> Result<Vec<(usize, usize)>, HarnessError> {
    text.split_whitespace()
        .map(|tok| {
            let (a, b) = tok
                .split_once('-')
                .ok_or_else(|| HarnessError::config(&["graph.edges"], format!("bad edge {tok:?}")))?;
            let p = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| HarnessError::config(&["graph.edges"], format!("bad edge {tok:?}: {e}")))
            };
            Ok((p(a)?, p(b)?))
        })
        .collect()
}

fn radius_rule(p: &mut Pairs, default_scale: f64, default_exponent: f64) -> Result<RadiusRule, HarnessError> {
    let kind = p.take("radius").unwrap_or_else(|| "power".into());
    let u_scale = p.parse_or("u_scale", default_scale)?;
    Ok(match choice("radius", &kind, &["power", "geometric"])? {
        "power" => RadiusRule::Power(PowerDecay {
            scale: u_scale,
            shift: p.parse_or("u_shift", 0.0)?,
            exponent: p.parse_or("u_exponent", default_exponent)?,
        }),
        _ => RadiusRule::Geometric {
            scale: u_scale,
            ratio: p
                .parse_opt("u_ratio")?
                .ok_or_else(|| HarnessError::config(&["u_ratio"], "geometric radius needs u_ratio"))?,
        },
    })
}

/// Parses a configuration or a manifest.
pub fn parse_config(text: &str) -> Result<RunConfig, HarnessError> {
    let mut p = Pairs::parse(text)?;
    let seed: u64 = p
        .parse_opt("seed")?
        .ok_or_else(|| HarnessError::config(&["seed"], "missing required key seed"))?;
    let kernel_name = p.take("kernel").unwrap_or_else(|| "alg1".into());
    let kernel = Kernel::from_str(&kernel_name).map_err(|e| HarnessError::config(&["kernel"], e.to_string()))?;
    let d = p.parse_or("d", 64usize)?;
    let n = p.parse_or("n", 50usize)?;
    let iterations = p.parse_or("iterations", 1000u64)?;

    let mut config = RunConfig::new(kernel, d, n, iterations, seed);

    let suite = p.take("suite").unwrap_or_else(|| "paper".into());
    config.suite = match choice("suite", &suite, &["paper", "quadratic"])? {
        "paper" => SuiteSpec::Paper,
        _ => SuiteSpec::Quadratic {
            center_scale: p.parse_or("center_scale", 1.0)?,
        },
    };

    let graph = p.take("graph").unwrap_or_else(|| "geometric".into());
    config.graph = match choice("graph", &graph, &["ring", "path", "complete", "geometric"])? {
        "ring" => GraphSpec::Ring,
        "path" => GraphSpec::Path,
        "complete" => GraphSpec::Complete,
        _ => GraphSpec::Geometric {
            max_angle: p.parse_or("max_angle", std::f64::consts::FRAC_PI_4)?,
        },
    };

    let weights = p.take("weights").unwrap_or_else(|| "metropolis".into());
    config.weights = match choice("weights", &weights, &["metropolis", "lazy-metropolis"])? {
        "metropolis" => WeightScheme::Metropolis,
        _ => WeightScheme::LazyMetropolis,
    };

    let schedule = p.take("schedule").unwrap_or_else(|| "manual".into());
    config.schedule = match choice(
        "schedule",
        &schedule,
        &["manual", "theorem1", "theorem2", "theorem3", "theorem4"],
    )? {
        "manual" => ScheduleSpec::Manual {
            step: PowerDecay {
                scale: p.parse_or("eta_scale", 0.02)?,
                shift: p.parse_or("eta_shift", 0.0)?,
                exponent: p.parse_or("eta_exponent", 0.5)?,
            },
            radius: radius_rule(&mut p, 4.0, 0.5)?,
        },
        "theorem1" => ScheduleSpec::Theorem1 {
            alpha_eta: p.parse_or("alpha_eta", 1.0)?,
            alpha_u: p.parse_or("alpha_u", 1.0)?,
            gamma: p.parse_or("gamma", 2.0)?,
        },
        "theorem2" => ScheduleSpec::Theorem2 {
            alpha_eta: p.parse_or("alpha_eta", 2.0)?,
            alpha_u: p.parse_or("alpha_u", 1.0)?,
        },
        "theorem3" => ScheduleSpec::Theorem3 {
            radius: radius_rule(&mut p, 0.1, 1.0)?,
        },
        _ => ScheduleSpec::Theorem4 {
            alpha: p.parse_or("alpha", 1.0)?,
            u_scale: p.parse_or("u_scale", 1.0)?,
            lambda_tilde: p.parse_opt("lambda_tilde")?,
        },
    };

    config.constants = ConstantOverrides {
        smoothness: p.parse_opt("smoothness")?,
        lipschitz: p.parse_opt("lipschitz")?,
        mu: p.parse_opt("mu")?,
    };
    config.init_variance = p.parse_or("init_variance", 25.0)?;
    config.output = p.take("output").map(PathBuf::from);

    let mut replay = Replay {
        edges: p.take("graph.edges").map(|e| parse_edges(&e)).transpose()?,
        x0: p.indexed_vectors("init.x", n)?,
        ..Replay::default()
    };
    match config.suite {
        SuiteSpec::Paper => {
            let a = p.vector("suite.a")?;
            let nu = p.vector("suite.nu")?;
            let b = p.vector("suite.b")?;
            let xi = p.indexed_vectors("suite.xi", n)?;
            replay.paper = match (a, nu, b, xi) {
                (Some(a), Some(nu), Some(b), Some(xi)) => Some(PaperInstanceParams { a, nu, xi, b }),
                (None, None, None, None) => None,
                _ => {
                    return Err(HarnessError::config(
                        &["suite.a", "suite.nu", "suite.b", "suite.xi"],
                        "stored suite parameters must be given together",
                    ))
                }
            };
        }
        SuiteSpec::Quadratic { .. } => replay.centers = p.indexed_vectors("suite.centers", n)?,
    }
    config.replay = replay;
    p.finish()?;
    Ok(config)
}
