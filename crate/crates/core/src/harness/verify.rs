//! Monte Carlo and deterministic checks of the estimator and consensus
//! properties the convergence analysis relies on.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::estimators::{self, Probe};
use crate::network::{self, Graph, MixingMatrix, STOCHASTIC_TOL};
use crate::rng::{RngStream, SetupPurpose};
use crate::stack::{self, AgentStack};

use super::trace::Trace;
use super::{HarnessError, Verdict};

/// Number of standard errors a Monte Carlo estimate may deviate.
pub const STD_ERR_THRESHOLD: f64 = 5.0;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

impl MeanEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n).sqrt(),
        }
    }

    /// Within `k` standard errors of `expected`. A zero standard error
    /// demands agreement to rounding.
    pub fn agrees_with(&self, expected: f64, k: f64) -> bool {
        let slack = k * self.std_err + 1e-12 * expected.abs().max(1.0);
        (self.mean - expected).abs() <= slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub verdict: Verdict,
    pub d: usize,
    pub samples: usize,
    /// `E‖G‖²` against `d‖g‖²`.
    pub second_moment: MeanEstimate,
    pub expected_second_moment: f64,
    /// `E‖G − g‖²` against `(d−1)‖g‖²`.
    pub variance: MeanEstimate,
    pub expected_variance: f64,
}

impl fmt::Display for Lemma1Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: d = {}, {} draws; E|G|^2 = {:.6} ± {:.2e} (expected {:.6}); E|G-g|^2 = {:.6} ± {:.2e} (expected {:.6})",
            self.verdict,
            self.d,
            self.samples,
            self.second_moment.mean,
            self.second_moment.std_err,
            self.expected_second_moment,
            self.variance.mean,
            self.variance.std_err,
            self.expected_variance,
        )
    }
}

/// 2-point estimator moments on the linear function `f(x) = gᵀx`, where the
/// small-radius limit holds exactly for every radius.
pub fn verify_lemma1(d: usize, g: &[f64], samples: usize, seed: u64) -> Result<Lemma1Report, HarnessError> {
    if samples < 10_000 {
        return Err(HarnessError::NotApplicable(format!("need at least 10^4 samples, got {samples}")));
    }
    if d == 0 || g.len() != d {
        return Err(HarnessError::NotApplicable(format!("gradient has {} entries for d = {d}", g.len())));
    }
    let slope = g.to_vec();
    let mut probe = Probe::new(move |x: &[f64]| stack::dot(&slope, x));
    let mut rng = RngStream::setup(seed, SetupPurpose::Verification).generator();
    let x = vec![0.0; d];
    let mut second = Vec::with_capacity(samples);
    let mut centered = Vec::with_capacity(samples);
    for _ in 0..samples {
        let z = estimators::sample_sphere_with(d, &mut rng)?;
        let est = estimators::estimate_2point(&mut probe, &x, 1.0, &z)?;
        second.push(stack::norm_sq(&est));
        centered.push(stack::distance_sq(&est, g));
    }
    let g2 = stack::norm_sq(g);
    let second_moment = MeanEstimate::from_samples(&second);
    let variance = MeanEstimate::from_samples(&centered);
    let expected_second_moment = d as f64 * g2;
    let expected_variance = (d as f64 - 1.0) * g2;
    let pass = second_moment.agrees_with(expected_second_moment, STD_ERR_THRESHOLD)
        && variance.agrees_with(expected_variance, STD_ERR_THRESHOLD);
    Ok(Lemma1Report {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        d,
        samples,
        second_moment,
        expected_second_moment,
        variance,
        expected_variance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRow {
    pub u: f64,
    pub error: f64,
    /// `½ u L √d`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasReport {
    pub verdict: Verdict,
    pub rows: Vec<BiasRow>,
}

impl fmt::Display for BiasReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.verdict)?;
        for r in &self.rows {
            writeln!(f, "  u = {:<8} error {:.6e} <= bound {:.6e}", r.u, r.error, r.bound)?;
        }
        Ok(())
    }
}

/// `‖G^{(2d)}(x; u) − ∇f(x)‖ ≤ ½ u L √d` for each `u` in the grid.
pub fn verify_estimator_bias<F: Fn(&[f64]) -> f64>(
    f: F,
    gradient: &[f64],
    x: &[f64],
    radii: &[f64],
    smoothness: f64,
) -> Result<BiasReport, HarnessError> {
    let mut probe = Probe::new(f);
    let sqrt_d = (x.len() as f64).sqrt();
    let mut rows = Vec::with_capacity(radii.len());
    for &u in radii {
        let est = estimators::estimate_2d_point(&mut probe, x, u)?;
        rows.push(BiasRow {
            u,
            error: stack::distance_sq(&est, gradient).sqrt(),
            bound: 0.5 * u * smoothness * sqrt_d,
        });
    }
    let pass = rows.iter().all(|r| r.error <= r.bound + 1e-9);
    Ok(BiasReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub verdict: Verdict,
    pub rho: f64,
    pub trials: usize,
    /// `max ‖W(x − 𝟙⊗x̄)‖ / ‖x − 𝟙⊗x̄‖` over the trials.
    pub worst_ratio: f64,
    /// Largest `‖W(x−𝟙⊗x̄)‖ − ρ‖x−𝟙⊗x̄‖`.
    pub worst_excess: f64,
    /// Largest componentwise change of the row mean.
    pub max_mean_drift: f64,
}

impl fmt::Display for ContractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} trials, worst ratio {:.6} vs rho {:.6}, mean drift {:.2e}",
            self.verdict, self.trials, self.worst_ratio, self.rho, self.max_mean_drift
        )
    }
}

/// Contraction of the disagreement component and exact mean preservation on
/// random Gaussian stacks.
pub fn verify_contraction(w: &MixingMatrix, d: usize, trials: usize, seed: u64) -> ContractionReport {
    let n = w.n();
    let mut rng = RngStream::setup(seed, SetupPurpose::Verification).generator();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut max_mean_drift: f64 = 0.0;
    for _ in 0..trials {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let x = AgentStack::from_rows(&rows).expect("rows are rectangular");
        let out = network::consensus_apply(w, &x).expect("shape matches");
        let before = x.deviation().norm();
        let after = out.deviation().norm();
        worst_ratio = worst_ratio.max(after / before);
        worst_excess = worst_excess.max(after - w.rho() * before);
        let drift = x
            .mean()
            .iter()
            .zip(out.mean())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_mean_drift = max_mean_drift.max(drift);
    }
    let pass = worst_excess <= 1e-9 && max_mean_drift <= 1e-12;
    ContractionReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        rho: w.rho(),
        trials,
        worst_ratio,
        worst_excess,
        max_mean_drift,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    pub verdict: Verdict,
    pub max_row_deviation: f64,
    pub max_col_deviation: f64,
    pub pattern_matches: bool,
    pub diagonal_positive: bool,
    pub rho: f64,
}

impl fmt::Display for MixingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: row/col sum deviation {:.1e}/{:.1e}, pattern {}, diagonal {}, rho {:.6}",
            self.verdict,
            self.max_row_deviation,
            self.max_col_deviation,
            if self.pattern_matches { "ok" } else { "MISMATCH" },
            if self.diagonal_positive { "ok" } else { "NON-POSITIVE" },
            self.rho
        )
    }
}

/// Double stochasticity, positivity pattern and `rho < 1`.
pub fn verify_mixing_matrix(w: &MixingMatrix, g: &Graph) -> MixingReport {
    let n = w.n();
    let mut max_row_deviation: f64 = 0.0;
    let mut max_col_deviation: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| w.get(i, j)).sum();
        let col: f64 = (0..n).map(|j| w.get(j, i)).sum();
        max_row_deviation = max_row_deviation.max((row - 1.0).abs());
        max_col_deviation = max_col_deviation.max((col - 1.0).abs());
    }
    let pattern_matches = w.matches_graph(g);
    let diagonal_positive = (0..n).all(|i| w.get(i, i) > 0.0);
    let pass = max_row_deviation <= STOCHASTIC_TOL
        && max_col_deviation <= STOCHASTIC_TOL
        && pattern_matches
        && diagonal_positive
        && w.rho() < 1.0;
    MixingReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        max_row_deviation,
        max_col_deviation,
        pattern_matches,
        diagonal_positive,
        rho: w.rho(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridReport {
    pub verdict: Verdict,
    /// `max_t e_track / e_track(T)` for the 2d-point tracking run.
    pub alg2_reduction: f64,
    /// Mean tracking error of the 2-point run over its last 20% of
    /// iterations divided by the mean over its first 20%.
    pub hybrid_persistence: f64,
    pub note: String,
}

impl fmt::Display for HybridReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: 2d-point tracking error reduced {:.3e}x (need >= 100); 2-point tracking error late/early {:.3} (need >= 0.1){}",
            self.verdict,
            self.alg2_reduction,
            self.hybrid_persistence,
            if self.note.is_empty() { String::new() } else { format!(" ({})", self.note) }
        )
    }
}

fn tracking_errors(trace: &Trace) -> Vec<f64> {
    trace.steps().iter().filter_map(|r| r.track_err).collect()
}

/// Compares the tracking error of gradient tracking driven by the 2d-point
/// estimator (which must vanish) with that driven by the 2-point estimator
/// (which must not).
pub fn verify_hybrid_nonvanishing(alg2: &Trace, hybrid: &Trace, d: usize) -> Result<HybridReport, HarnessError> {
    const MIN_ITERATIONS: usize = 500;
    let a = tracking_errors(alg2);
    let h = tracking_errors(hybrid);
    if a.len() < MIN_ITERATIONS || h.len() < MIN_ITERATIONS {
        return Err(HarnessError::NotApplicable(format!(
            "need {MIN_ITERATIONS} tracked iterations per run, got {} and {}",
            a.len(),
            h.len()
        )));
    }
    let peak = a.iter().copied().fold(0.0, f64::max);
    let last = *a.last().expect("non-empty");
    let alg2_reduction = if last > 0.0 { peak / last } else { f64::INFINITY };
    let fifth = h.len() / 5;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let early = mean(&h[..fifth]);
    let late = mean(&h[h.len() - fifth..]);
    let hybrid_persistence = if early > 0.0 { late / early } else { f64::NAN };

    let mut report = HybridReport {
        verdict: Verdict::Inconclusive,
        alg2_reduction,
        hybrid_persistence,
        note: String::new(),
    };
    if peak == 0.0 && early == 0.0 && late == 0.0 {
        report.note = "tracking errors identically zero".into();
        return Ok(report);
    }
    if d == 1 {
        report.note = "d = 1: the 2-point estimator has no variance".into();
        return Ok(report);
    }
    let pass = alg2_reduction >= 100.0 && hybrid_persistence >= 0.1;
    report.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}

/// Mean of `metric` over the first and the last `fraction` of the steps.
pub fn window_means(trace: &Trace, fraction: f64, metric: impl Fn(&super::TraceRow) -> f64) -> (f64, f64) {
    let steps = trace.steps();
    let k = ((steps.len() as f64 * fraction).floor() as usize).max(1);
    let mean = |rows: &[super::TraceRow]| rows.iter().map(&metric).sum::<f64>() / rows.len() as f64;
    (mean(&steps[..k]), mean(&steps[steps.len() - k..]))
}

/// Growth of `t · consensus_err(t)` over the second half of a run: the mean
/// over the last tenth of the steps divided by the mean over the first
/// tenth of the second half. Stays near one when the consensus error decays
/// like `1/t`.
pub fn scaled_consensus_growth(trace: &Trace) -> f64 {
    let steps = trace.steps();
    let half = &steps[steps.len() / 2..];
    let k = (half.len() / 5).max(1);
    let scaled = |rows: &[super::TraceRow]| rows.iter().map(|r| r.t as f64 * r.consensus_err).sum::<f64>() / rows.len() as f64;
    scaled(&half[half.len() - k..]) / scaled(&half[..k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_ring, metropolis_weights};

    #[test]
    fn lemma1_one_dimension_is_exact() {
        let r = verify_lemma1(1, &[2.5], 10_000, 1).unwrap();
        assert_eq!(r.variance.mean, 0.0);
        assert!((r.second_moment.mean - 6.25).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn lemma1_zero_gradient() {
        let r = verify_lemma1(5, &[0.0; 5], 10_000, 1).unwrap();
        assert_eq!(r.second_moment.mean, 0.0);
        assert_eq!(r.variance.mean, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn lemma1_needs_enough_samples() {
        assert!(verify_lemma1(4, &[1.0; 4], 100, 1).is_err());
    }

    #[test]
    fn bias_of_cubic() {
        let r = verify_estimator_bias(|x: &[f64]| x[0].powi(3), &[3.0], &[1.0], &[0.1, 0.05, 0.025], 12.0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.rows[0].error - 0.01).abs() < 1e-12);
        assert!((r.rows[0].bound - 0.6).abs() < 1e-15);
        // The central-difference error on a cubic is exactly u².
        for pair in r.rows.windows(2) {
            assert!((pair[0].error / pair[1].error - 4.0).abs() < 1e-6);
        }
    }

    #[test]
    fn contraction_on_ring() {
        let w = metropolis_weights(&build_ring(4).unwrap()).unwrap();
        let r = verify_contraction(&w, 3, 100, 9);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.worst_ratio <= 1.0 / 3.0 + 1e-9);
    }
}
