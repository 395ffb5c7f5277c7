//! Local objective suites `f(x) = (1/n) Σ f_i(x)` with exact value and
//! gradient oracles.
//!
//! Gradients are for metrics and verification only. The iteration kernels see
//! a suite through [`ValueQueries`], which exposes function values and nothing
//! else.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::RngStream;
use crate::stack;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("invalid suite size: d = {d}, n = {n}")]
    InvalidSize { d: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
}

/// One agent's local function.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalObjective {
    /// `a / (1 + exp(−ξᵀx − ν)) + b ln(1 + ‖x‖²)`.
    Logistic { a: f64, nu: f64, xi: Vec<f64>, b: f64 },
    /// `½ ‖x − c‖²`.
    Quadratic { center: Vec<f64> },
    /// `gᵀx + offset`; constant when `g = 0`.
    Linear { slope: Vec<f64>, offset: f64 },
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl LocalObjective {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            LocalObjective::Logistic { a, nu, xi, b } => {
                a * sigmoid(stack::dot(xi, x) + nu) + b * stack::norm_sq(x).ln_1p()
            }
            LocalObjective::Quadratic { center } => 0.5 * stack::distance_sq(x, center),
            LocalObjective::Linear { slope, offset } => stack::dot(slope, x) + offset,
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LocalObjective::Logistic { a, nu, xi, b } => {
                let s = sigmoid(stack::dot(xi, x) + nu);
                let logistic = a * s * (1.0 - s);
                let radial = 2.0 * b / (1.0 + stack::norm_sq(x));
                xi.iter().zip(x).map(|(k, xk)| logistic * k + radial * xk).collect()
            }
            LocalObjective::Quadratic { center } => {
                x.iter().zip(center).map(|(xk, ck)| xk - ck).collect()
            }
            LocalObjective::Linear { slope, .. } => slope.clone(),
        }
    }
}

/// Known analytic constants of a suite. `None` means unknown or not
/// applicable.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuiteConstants {
    /// Uniform smoothness constant of every `f_i`.
    pub smoothness: Option<f64>,
    /// Uniform Lipschitz constant of every `f_i`.
    pub lipschitz: Option<f64>,
    /// Gradient-domination (PL) constant of `f`.
    pub mu: Option<f64>,
    /// Global minimum `f*`.
    pub f_star: Option<f64>,
    /// `f* − (1/n) Σ f_i*`.
    pub delta_gap: Option<f64>,
}

/// Parameters of the logistic-plus-log-barrier benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperInstanceParams {
    pub a: Vec<f64>,
    pub nu: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSuite {
    d: usize,
    locals: Vec<LocalObjective>,
    constants: SuiteConstants,
}

impl ObjectiveSuite {
    pub fn new(
        d: usize,
        locals: Vec<LocalObjective>,
        constants: SuiteConstants,
    ) -> Result<Self, ObjectiveError> {
        if d == 0 || locals.is_empty() {
            return Err(ObjectiveError::InvalidSize { d, n: locals.len() });
        }
        for local in &locals {
            let got = match local {
                LocalObjective::Logistic { xi, .. } => xi.len(),
                LocalObjective::Quadratic { center } => center.len(),
                LocalObjective::Linear { slope, .. } => slope.len(),
            };
            if got != d {
                return Err(ObjectiveError::Shape { expected: d, got });
            }
        }
        Ok(Self {
            d,
            locals,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn agents(&self) -> usize {
        self.locals.len()
    }

    pub fn locals(&self) -> &[LocalObjective] {
        &self.locals
    }

    pub fn local(&self, i: usize) -> &LocalObjective {
        &self.locals[i]
    }

    pub fn constants(&self) -> &SuiteConstants {
        &self.constants
    }

    pub fn with_constants(mut self, constants: SuiteConstants) -> Self {
        self.constants = constants;
        self
    }

    fn check(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() == self.d {
            Ok(())
        } else {
            Err(ObjectiveError::Shape {
                expected: self.d,
                got: x.len(),
            })
        }
    }

    pub fn global_value(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        self.check(x)?;
        let sum: f64 = self.locals.iter().map(|f| f.value(x)).sum();
        Ok(sum / self.agents() as f64)
    }

    pub fn global_grad(&self, x: &[f64]) -> Result<Vec<f64>, ObjectiveError> {
        self.check(x)?;
        let mut grad = vec![0.0; self.d];
        for f in &self.locals {
            for (g, v) in grad.iter_mut().zip(f.gradient(x)) {
                *g += v;
            }
        }
        let scale = 1.0 / self.agents() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok(grad)
    }

    /// Logistic-suite parameters, if every local is logistic.
    pub fn paper_params(&self) -> Option<PaperInstanceParams> {
        let mut params = PaperInstanceParams {
            a: vec![],
            nu: vec![],
            xi: vec![],
            b: vec![],
        };
        for local in &self.locals {
            let LocalObjective::Logistic { a, nu, xi, b } = local else {
                return None;
            };
            params.a.push(*a);
            params.nu.push(*nu);
            params.xi.push(xi.clone());
            params.b.push(*b);
        }
        Some(params)
    }

    pub fn queries(&self) -> ValueQueries<'_> {
        ValueQueries { suite: self }
    }
}

/// Zero-order view of a suite: local function values only.
#[derive(Clone, Copy)]
pub struct ValueQueries<'a> {
    suite: &'a ObjectiveSuite,
}

impl<'a> ValueQueries<'a> {
    pub fn dim(&self) -> usize {
        self.suite.d
    }

    pub fn agents(&self) -> usize {
        self.suite.agents()
    }

    /// `x ↦ f_i(x)`.
    pub fn local(&self, i: usize) -> impl Fn(&[f64]) -> f64 + 'a {
        let local = &self.suite.locals[i];
        move |x| local.value(x)
    }
}

/// Draws the logistic benchmark with the given dimension and agent count.
///
/// `a_i`, `ν_i` and every entry of `ξ_i` are i.i.d. standard normal. The
/// weights `b` follow `𝒩(𝟙, I − (1/n)𝟙𝟙ᵀ)`: standard normals with their
/// mean projected out, plus one.
pub fn make_paper_instance(d: usize, n: usize, stream: RngStream) -> Result<ObjectiveSuite, ObjectiveError> {
    if d == 0 || n < 2 {
        return Err(ObjectiveError::InvalidSize { d, n });
    }
    let mut rng = stream.generator();
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let mut a = Vec::with_capacity(n);
    let mut nu = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    for _ in 0..n {
        a.push(normal());
        nu.push(normal());
        xi.push((0..d).map(|_| normal()).collect::<Vec<_>>());
    }
    let raw: Vec<f64> = (0..n).map(|_| normal()).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let b: Vec<f64> = raw.iter().map(|r| r - mean + 1.0).collect();
    paper_instance_from_params(&PaperInstanceParams { a, nu, xi, b })
}

/// Rebuilds a logistic suite from stored parameters (constants unknown).
pub fn paper_instance_from_params(p: &PaperInstanceParams) -> Result<ObjectiveSuite, ObjectiveError> {
    let n = p.a.len();
    if p.nu.len() != n || p.xi.len() != n || p.b.len() != n {
        return Err(ObjectiveError::InvalidSize {
            d: p.xi.first().map_or(0, Vec::len),
            n,
        });
    }
    let d = p.xi.first().map_or(0, Vec::len);
    let locals = (0..n)
        .map(|i| LocalObjective::Logistic {
            a: p.a[i],
            nu: p.nu[i],
            xi: p.xi[i].clone(),
            b: p.b[i],
        })
        .collect();
    ObjectiveSuite::new(d, locals, SuiteConstants::default())
}

/// `f_i(x) = ½‖x − c_i‖²`. Then `f(x) = ½‖x − c̄‖² + (1/2n) Σ ‖c_i − c̄‖²`,
/// so `L = μ = 1`, `f* = (1/2n) Σ ‖c_i − c̄‖²` and, since every `f_i* = 0`,
/// `Δ = f*`.
pub fn make_quadratic_suite(d: usize, centers: &[Vec<f64>]) -> Result<ObjectiveSuite, ObjectiveError> {
    let n = centers.len();
    if d == 0 || n == 0 {
        return Err(ObjectiveError::InvalidSize { d, n });
    }
    if let Some(bad) = centers.iter().find(|c| c.len() != d) {
        return Err(ObjectiveError::Shape {
            expected: d,
            got: bad.len(),
        });
    }
    let mut mean = vec![0.0; d];
    for c in centers {
        for (m, v) in mean.iter_mut().zip(c) {
            *m += v / n as f64;
        }
    }
    let f_star = centers.iter().map(|c| stack::distance_sq(c, &mean)).sum::<f64>() / (2.0 * n as f64);
    let locals = centers
        .iter()
        .map(|c| LocalObjective::Quadratic { center: c.clone() })
        .collect();
    ObjectiveSuite::new(
        d,
        locals,
        SuiteConstants {
            smoothness: Some(1.0),
            lipschitz: None,
            mu: Some(1.0),
            f_star: Some(f_star),
            delta_gap: Some(f_star),
        },
    )
}

/// Quadratic suite with i.i.d. `𝒩(0, scale²)` center coordinates.
pub fn make_random_quadratic_suite(
    d: usize,
    n: usize,
    scale: f64,
    stream: RngStream,
) -> Result<ObjectiveSuite, ObjectiveError> {
    let mut rng = stream.generator();
    let centers: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    make_quadratic_suite(d, &centers)
}

/// `f_i(x) = g_iᵀx + offset_i`. Smoothness 0; no minimizer unless all slopes
/// average to zero, so the optimum constants are left unknown.
pub fn make_linear_suite(d: usize, slopes: &[Vec<f64>], offsets: &[f64]) -> Result<ObjectiveSuite, ObjectiveError> {
    if slopes.len() != offsets.len() {
        return Err(ObjectiveError::InvalidSize { d, n: slopes.len() });
    }
    let locals = slopes
        .iter()
        .zip(offsets)
        .map(|(g, &offset)| LocalObjective::Linear {
            slope: g.clone(),
            offset,
        })
        .collect();
    ObjectiveSuite::new(
        d,
        locals,
        SuiteConstants {
            smoothness: Some(0.0),
            ..SuiteConstants::default()
        },
    )
}
