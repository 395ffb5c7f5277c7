//! Flat manifest holding every resolved parameter of a run plus the drawn
//! graph, suite and initial points, so that it parses back into a config
//! that replays the run exactly.

use std::fmt::Write as _;

use crate::algorithms::{RadiusRule, ScheduleKind};
use crate::harness::experiment::{Experiment, GraphSpec, ScheduleSpec, SuiteSpec};
use crate::objectives::LocalObjective;

use super::csv::format_float;

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(" ")
}

struct Lines(String);

impl Lines {
    fn kv(&mut self, key: &str, value: impl AsRef<str>) {
        let _ = writeln!(self.0, "{key} = {}", value.as_ref());
    }

    fn float(&mut self, key: &str, value: f64) {
        self.kv(key, format_float(value));
    }
}

fn radius(out: &mut Lines, r: &RadiusRule) {
    match r {
        RadiusRule::Power(p) => {
            out.kv("radius", "power");
            out.float("u_scale", p.scale);
            out.float("u_exponent", p.exponent);
            out.float("u_shift", p.shift);
        }
        RadiusRule::Geometric { scale, ratio } => {
            out.kv("radius", "geometric");
            out.float("u_scale", *scale);
            out.float("u_ratio", *ratio);
        }
    }
}

pub fn render_manifest(e: &Experiment) -> String {
    let c = &e.config;
    let mut out = Lines(String::new());
    out.0.push_str("# run manifest; parse with `dzo run <this file>` to replay\n");
    out.kv("kernel", c.kernel.name());
    out.kv("seed", c.seed.to_string());
    out.kv("d", c.d.to_string());
    out.kv("n", c.n.to_string());
    out.kv("iterations", c.iterations.to_string());
    match c.suite {
        SuiteSpec::Paper => out.kv("suite", "paper"),
        SuiteSpec::Quadratic { center_scale } => {
            out.kv("suite", "quadratic");
            out.float("center_scale", center_scale);
        }
    }
    match c.graph {
        GraphSpec::Ring => out.kv("graph", "ring"),
        GraphSpec::Path => out.kv("graph", "path"),
        GraphSpec::Complete => out.kv("graph", "complete"),
        GraphSpec::Geometric { max_angle } => {
            out.kv("graph", "geometric");
            out.float("max_angle", max_angle);
        }
    }
    out.kv("weights", c.weights.name());
    match c.schedule {
        ScheduleSpec::Manual { step, radius: r } => {
            out.kv("schedule", "manual");
            out.float("eta_scale", step.scale);
            out.float("eta_exponent", step.exponent);
            out.float("eta_shift", step.shift);
            radius(&mut out, &r);
        }
        ScheduleSpec::Theorem1 {
            alpha_eta,
            alpha_u,
            gamma,
        } => {
            out.kv("schedule", "theorem1");
            out.float("alpha_eta", alpha_eta);
            out.float("alpha_u", alpha_u);
            out.float("gamma", gamma);
        }
        ScheduleSpec::Theorem2 { alpha_eta, alpha_u } => {
            out.kv("schedule", "theorem2");
            out.float("alpha_eta", alpha_eta);
            out.float("alpha_u", alpha_u);
        }
        ScheduleSpec::Theorem3 { radius: r } => {
            out.kv("schedule", "theorem3");
            radius(&mut out, &r);
        }
        ScheduleSpec::Theorem4 { alpha, u_scale, .. } => {
            out.kv("schedule", "theorem4");
            out.float("alpha", alpha);
            out.float("u_scale", u_scale);
            if let ScheduleKind::Theorem4 { lambda_tilde, .. } = e.schedule.kind {
                out.float("lambda_tilde", lambda_tilde);
            }
        }
    }
    for (key, v) in [
        ("smoothness", c.constants.smoothness),
        ("lipschitz", c.constants.lipschitz),
        ("mu", c.constants.mu),
    ] {
        if let Some(v) = v {
            out.float(key, v);
        }
    }
    out.float("init_variance", c.init_variance);

    out.0.push_str("# derived values, ignored on input\n");
    out.kv("derived.resampled_per_seed", "graph suite initial_points");
    out.float("derived.rho", e.w.rho());
    out.float("derived.eta_1", e.schedule.eta(1));
    out.float("derived.u_1", e.schedule.u(1));
    match e.schedule.kind {
        ScheduleKind::Theorem2 { t0, .. } => out.kv("derived.t0", t0.to_string()),
        ScheduleKind::Theorem3 { ceiling } => out.float("derived.eta_ceiling", ceiling),
        ScheduleKind::Theorem4 { lambda, .. } => out.float("derived.lambda", lambda),
        _ => {}
    }
    let k = e.suite.constants();
    for (key, v) in [
        ("derived.smoothness", k.smoothness),
        ("derived.mu", k.mu),
        ("derived.f_star", k.f_star),
    ] {
        if let Some(v) = v {
            out.float(key, v);
        }
    }

    out.0.push_str("# drawn inputs\n");
    let edges: Vec<String> = e.graph.edges().iter().map(|(i, j)| format!("{i}-{j}")).collect();
    out.kv("graph.edges", edges.join(" "));
    if let Some(p) = e.suite.paper_params() {
        out.kv("suite.a", join(&p.a));
        out.kv("suite.nu", join(&p.nu));
        out.kv("suite.b", join(&p.b));
        for (i, xi) in p.xi.iter().enumerate() {
            out.kv(&format!("suite.xi.{i}"), join(xi));
        }
    } else {
        for (i, local) in e.suite.locals().iter().enumerate() {
            if let LocalObjective::Quadratic { center } = local {
                out.kv(&format!("suite.centers.{i}"), join(center));
            }
        }
    }
    for (i, row) in e.x0.iter_rows().enumerate() {
        out.kv(&format!("init.x.{i}"), join(row));
    }
    out.0
}
