//! Zero-order gradient estimators built from function-value queries only.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::rng::RngStream;
use crate::stack;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
    #[error("smoothing radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("direction has dimension {direction}, point has {point}")]
    Shape { direction: usize, point: usize },
    #[error("function returned non-finite value {value}")]
    NonFinite { value: f64 },
    #[error("need at least one sample")]
    NoSamples,
}

/// Unit vector drawn uniformly from the sphere `𝕊_{d−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereDirection(Vec<f64>);

impl SphereDirection {
    /// Normalizes `v`; `None` for the zero vector.
    pub fn from_vec(mut v: Vec<f64>) -> Option<Self> {
        let r = stack::norm(&v);
        if r == 0.0 || !r.is_finite() {
            return None;
        }
        v.iter_mut().for_each(|x| *x /= r);
        Some(Self(v))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Normalized standard Gaussian; redrawn on the (floating-point possible)
/// all-zero draw.
pub fn sample_sphere(d: usize, stream: RngStream) -> Result<SphereDirection, EstimatorError> {
    let mut rng = stream.generator();
    sample_sphere_with(d, &mut rng)
}

pub fn sample_sphere_with<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
) -> Result<SphereDirection, EstimatorError> {
    if d == 0 {
        return Err(EstimatorError::InvalidDimension(d));
    }
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(z) = SphereDirection::from_vec(v) {
            return Ok(z);
        }
    }
}

/// Value-query access to one scalar function with a running query count.
pub struct Probe<F> {
    f: F,
    queries: u64,
}

impl<F: Fn(&[f64]) -> f64> Probe<F> {
    pub fn new(f: F) -> Self {
        Self { f, queries: 0 }
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn query(&mut self, x: &[f64]) -> Result<f64, EstimatorError> {
        self.queries += 1;
        let value = (self.f)(x);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(EstimatorError::NonFinite { value })
        }
    }
}

/// Below this radius central differences lose most of their precision in
/// double arithmetic.
pub fn radius_floor(x: &[f64]) -> f64 {
    1e-7 * (1.0 + stack::norm(x))
}

fn check_radius(x: &[f64], u: f64) -> Result<(), EstimatorError> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(EstimatorError::InvalidRadius(u));
    }
    if u < radius_floor(x) {
        warn!("smoothing radius {u:e} is below the precision floor {:e}", radius_floor(x));
    }
    Ok(())
}

/// `d · (f(x+uz) − f(x−uz)) / (2u) · z`, two queries.
pub fn estimate_2point<F: Fn(&[f64]) -> f64>(
    probe: &mut Probe<F>,
    x: &[f64],
    u: f64,
    z: &SphereDirection,
) -> Result<Vec<f64>, EstimatorError> {
    let d = x.len();
    if z.dim() != d {
        return Err(EstimatorError::Shape {
            direction: z.dim(),
            point: d,
        });
    }
    check_radius(x, u)?;
    let z = z.as_slice();
    let mut point: Vec<f64> = x.iter().zip(z).map(|(xi, zi)| xi + u * zi).collect();
    let forward = probe.query(&point)?;
    for ((p, xi), zi) in point.iter_mut().zip(x).zip(z) {
        *p = xi - u * zi;
    }
    let backward = probe.query(&point)?;
    let scale = d as f64 * (forward - backward) / (2.0 * u);
    Ok(z.iter().map(|zi| scale * zi).collect())
}

/// Coordinate-wise central differences, `2d` queries.
pub fn estimate_2d_point<F: Fn(&[f64]) -> f64>(
    probe: &mut Probe<F>,
    x: &[f64],
    u: f64,
) -> Result<Vec<f64>, EstimatorError> {
    if x.is_empty() {
        return Err(EstimatorError::InvalidDimension(0));
    }
    check_radius(x, u)?;
    let mut point = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        point[k] = x[k] + u;
        let forward = probe.query(&point)?;
        point[k] = x[k] - u;
        let backward = probe.query(&point)?;
        point[k] = x[k];
        out.push((forward - backward) / (2.0 * u));
    }
    Ok(out)
}

/// Sample mean (and per-sample second moment) of the 2-point estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloGradient {
    pub mean: Vec<f64>,
    /// Standard error of each coordinate of `mean`.
    pub std_err: Vec<f64>,
    pub samples: usize,
}

/// Monte Carlo mean of the 2-point estimator over `samples` fresh sphere
/// draws; estimates the gradient of the ball-smoothed function.
pub fn estimate_smoothed_gradient_mc<F: Fn(&[f64]) -> f64, R: Rng + ?Sized>(
    probe: &mut Probe<F>,
    x: &[f64],
    u: f64,
    samples: usize,
    rng: &mut R,
) -> Result<MonteCarloGradient, EstimatorError> {
    if samples == 0 {
        return Err(EstimatorError::NoSamples);
    }
    let d = x.len();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..samples {
        let z = sample_sphere_with(d, rng)?;
        let g = estimate_2point(probe, x, u, &z)?;
        for k in 0..d {
            sum[k] += g[k];
            sum_sq[k] += g[k] * g[k];
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_err = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            if samples < 2 {
                0.0
            } else {
                ((sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
            }
        })
        .collect();
    Ok(MonteCarloGradient {
        mean,
        std_err,
        samples,
    })
}
