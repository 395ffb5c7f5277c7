//! Step-size and smoothing-radius sequences, including the constructors that
//! realise each convergence theorem's parameter conditions.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("smoothing radii are not square-summable: {0}")]
    NotSummable(&'static str),
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> ScheduleError {
    ScheduleError::InvalidParameter { name, value, reason }
}

/// `t ↦ scale / (t + shift)^exponent`, for `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerDecay {
    pub scale: f64,
    pub shift: f64,
    pub exponent: f64,
}

impl PowerDecay {
    pub fn constant(value: f64) -> Self {
        Self {
            scale: value,
            shift: 0.0,
            exponent: 0.0,
        }
    }

    pub fn at(&self, t: u64) -> f64 {
        if self.exponent == 0.0 {
            self.scale
        } else {
            self.scale / (t as f64 + self.shift).powf(self.exponent)
        }
    }
}

/// Smoothing-radius family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiusRule {
    Power(PowerDecay),
    /// `u_t = scale · ratio^{t/2}`.
    Geometric { scale: f64, ratio: f64 },
}

impl RadiusRule {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            RadiusRule::Power(p) => p.at(t),
            RadiusRule::Geometric { scale, ratio } => scale * ratio.powf(t as f64 / 2.0),
        }
    }

    /// `Σ_{t≥1} u_t²`, or `None` when the series diverges.
    pub fn square_sum(&self) -> Option<f64> {
        match *self {
            RadiusRule::Geometric { scale, ratio } => {
                (0.0..1.0).contains(&ratio).then(|| scale * scale * ratio / (1.0 - ratio))
            }
            RadiusRule::Power(p) => {
                if p.scale == 0.0 {
                    return Some(0.0);
                }
                let q = 2.0 * p.exponent;
                if q <= 1.0 {
                    return None;
                }
                Some(p.scale * p.scale * shifted_zeta(q, p.shift))
            }
        }
    }

    fn validate(&self) -> Result<(), ScheduleError> {
        let (scale, ok_shape) = match *self {
            RadiusRule::Power(p) => (p.scale, p.exponent >= 0.0 && p.shift > -1.0),
            RadiusRule::Geometric { scale, ratio } => (scale, ratio > 0.0 && ratio <= 1.0),
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("u_scale", scale, "smoothing radius must be positive"));
        }
        if !ok_shape {
            return Err(invalid("u", scale, "radius sequence must be non-increasing and positive"));
        }
        Ok(())
    }
}

/// `Σ_{t≥1} (t + shift)^{−q}` for `q > 1`: exact head plus an
/// Euler–Maclaurin tail.
fn shifted_zeta(q: f64, shift: f64) -> f64 {
    const HEAD: u64 = 10_000;
    let g = |t: f64| (t + shift).powf(-q);
    let head: f64 = (1..HEAD).map(|t| g(t as f64)).sum();
    let a = HEAD as f64 + shift;
    // ∫_a^∞ s^{−q} ds + g(a)/2 − g'(a)/12 + g'''(a)/720
    let integral = a.powf(1.0 - q) / (q - 1.0);
    let d1 = -q * a.powf(-q - 1.0);
    let d3 = -q * (q + 1.0) * (q + 2.0) * a.powf(-q - 3.0);
    head + integral + 0.5 * a.powf(-q) - d1 / 12.0 + d3 / 720.0
}

/// Which parameter regime produced a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Theorem1 {
        alpha_eta: f64,
        alpha_u: f64,
        gamma: f64,
    },
    Theorem2 {
        alpha_eta: f64,
        alpha_u: f64,
        t0: u64,
    },
    Theorem3 {
        /// `min{1/6, (1−ρ²)²/(4ρ²(3+4ρ²))} / L`.
        ceiling: f64,
    },
    Theorem4 {
        alpha: f64,
        lambda: f64,
        lambda_tilde: f64,
    },
    Manual,
}

impl ScheduleKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScheduleKind::Theorem1 { .. } => "theorem1",
            ScheduleKind::Theorem2 { .. } => "theorem2",
            ScheduleKind::Theorem3 { .. } => "theorem3",
            ScheduleKind::Theorem4 { .. } => "theorem4",
            ScheduleKind::Manual => "manual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub step: PowerDecay,
    pub radius: RadiusRule,
}

impl Schedule {
    /// Hand-set sequences, e.g. `η_t = 0.02/√t`, `u_t = 4/√t`.
    pub fn manual(step: PowerDecay, radius: RadiusRule) -> Result<Self, ScheduleError> {
        if !(step.scale > 0.0 && step.scale.is_finite()) {
            return Err(invalid("eta_scale", step.scale, "step size must be positive"));
        }
        if step.exponent < 0.0 || step.shift <= -1.0 {
            return Err(invalid("eta_exponent", step.exponent, "step size must be non-increasing"));
        }
        radius.validate()?;
        Ok(Self {
            kind: ScheduleKind::Manual,
            step,
            radius,
        })
    }

    pub fn eta(&self, t: u64) -> f64 {
        self.step.at(t)
    }

    pub fn u(&self, t: u64) -> f64 {
        self.radius.at(t)
    }

    pub fn is_constant_step(&self) -> bool {
        self.step.exponent == 0.0
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ScheduleError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(name, value, "must be positive"))
    }
}

fn check_rho(rho: f64) -> Result<f64, ScheduleError> {
    if (0.0..1.0).contains(&rho) {
        Ok(rho)
    } else {
        Err(invalid("rho", rho, "must lie in [0, 1)"))
    }
}

/// `η_t = α_η / (4L√d) · t^{−1/2}`, `u_t = α_u G / (L√d) · t^{−(γ/2 − 1/4)}`
/// with `u_t` at its ceiling.
pub fn schedule_theorem1(
    smoothness: f64,
    d: usize,
    alpha_eta: f64,
    alpha_u: f64,
    lipschitz: f64,
    gamma: f64,
) -> Result<Schedule, ScheduleError> {
    let l = positive("L", smoothness)?;
    let g = positive("G", lipschitz)?;
    if !(alpha_eta > 0.0 && alpha_eta <= 1.0) {
        return Err(invalid("alpha_eta", alpha_eta, "must lie in (0, 1]"));
    }
    if !(alpha_u > 0.0 && alpha_u.is_finite()) {
        return Err(invalid(
            "alpha_u",
            alpha_u,
            "a zero radius cannot be queried; alpha_u must be positive",
        ));
    }
    if gamma.is_nan() || gamma <= 1.0 {
        return Err(invalid("gamma", gamma, "must exceed 1"));
    }
    let sqrt_d = (d as f64).sqrt();
    let step = PowerDecay {
        scale: alpha_eta / (4.0 * l * sqrt_d),
        shift: 0.0,
        exponent: 0.5,
    };
    if step.at(1) * l > 0.25 + 1e-15 {
        return Err(invalid("alpha_eta", alpha_eta, "eta_1 L exceeds 1/4"));
    }
    let radius = RadiusRule::Power(PowerDecay {
        scale: alpha_u * g / (l * sqrt_d),
        shift: 0.0,
        exponent: gamma / 2.0 - 0.25,
    });
    Ok(Schedule {
        kind: ScheduleKind::Theorem1 {
            alpha_eta,
            alpha_u,
            gamma,
        },
        step,
        radius,
    })
}

/// Smallest admissible integer offset
/// `t₀ ≥ 2α_η L / (μ(1−ρ²)) · (32Ld/(3μ) + 9ρ) − 1`.
pub fn theorem2_offset(mu: f64, smoothness: f64, d: usize, rho: f64, alpha_eta: f64) -> u64 {
    let bound = 2.0 * alpha_eta * smoothness / (mu * (1.0 - rho * rho))
        * (32.0 * smoothness * d as f64 / (3.0 * mu) + 9.0 * rho)
        - 1.0;
    // Guard against 41.999999… from rounding in the bound itself.
    let rounded = bound.round();
    let ceil = if (bound - rounded).abs() <= 1e-9 * bound.abs().max(1.0) {
        rounded
    } else {
        bound.ceil()
    };
    ceil.max(0.0) as u64
}

/// `η_t = 2α_η / (μ(t + t₀))`, `u_t = α_u / √(t + t₀)`.
pub fn schedule_theorem2(
    mu: f64,
    smoothness: f64,
    d: usize,
    rho: f64,
    alpha_eta: f64,
    alpha_u: f64,
) -> Result<Schedule, ScheduleError> {
    let mu = positive("mu", mu)?;
    let l = positive("L", smoothness)?;
    let rho = check_rho(rho)?;
    if !(alpha_eta > 1.0 && alpha_eta.is_finite()) {
        return Err(invalid("alpha_eta", alpha_eta, "must exceed 1"));
    }
    let alpha_u = positive("alpha_u", alpha_u)?;
    let t0 = theorem2_offset(mu, l, d, rho, alpha_eta);
    Ok(Schedule {
        kind: ScheduleKind::Theorem2 {
            alpha_eta,
            alpha_u,
            t0,
        },
        step: PowerDecay {
            scale: 2.0 * alpha_eta / mu,
            shift: t0 as f64,
            exponent: 1.0,
        },
        radius: RadiusRule::Power(PowerDecay {
            scale: alpha_u,
            shift: t0 as f64,
            exponent: 0.5,
        }),
    })
}

/// `min{1/6, (1−ρ²)²/(4ρ²(3+4ρ²))}`, the admissible range of `ηL` for the
/// constant-step gradient-tracking bound.
pub fn theorem3_step_ceiling(rho: f64) -> f64 {
    let r2 = rho * rho;
    if r2 == 0.0 {
        return 1.0 / 6.0;
    }
    let network = (1.0 - r2).powi(2) / (4.0 * r2 * (3.0 + 4.0 * r2));
    network.min(1.0 / 6.0)
}

/// Constant `η` at the ceiling; `radius` must be non-increasing with
/// `d Σ u_t² < ∞`.
pub fn schedule_theorem3(smoothness: f64, rho: f64, radius: RadiusRule) -> Result<Schedule, ScheduleError> {
    let l = positive("L", smoothness)?;
    let rho = check_rho(rho)?;
    radius.validate()?;
    if radius.square_sum().is_none() {
        return Err(ScheduleError::NotSummable("need sum of u_t^2 < infinity"));
    }
    let ceiling = theorem3_step_ceiling(rho) / l;
    Ok(Schedule {
        kind: ScheduleKind::Theorem3 { ceiling },
        step: PowerDecay::constant(ceiling),
        radius,
    })
}

/// `λ = 1 − α((1−ρ²)/5)² (μ/L)^{4/3}`.
pub fn theorem4_lambda(mu: f64, smoothness: f64, rho: f64, alpha: f64) -> f64 {
    let gap = (1.0 - rho * rho) / 5.0;
    1.0 - alpha * gap * gap * (mu / smoothness).powf(4.0 / 3.0)
}

/// `ηL = α (μ/L)^{1/3} (1−ρ²)² / 14` and `u_t = u₁ λ̃^{t/2}` with `λ̃ < λ`.
pub fn schedule_theorem4(
    mu: f64,
    smoothness: f64,
    rho: f64,
    alpha: f64,
    u_scale: f64,
    lambda_tilde: f64,
) -> Result<Schedule, ScheduleError> {
    let mu = positive("mu", mu)?;
    let l = positive("L", smoothness)?;
    let rho = check_rho(rho)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid("alpha", alpha, "must lie in (0, 1]"));
    }
    if mu > l {
        return Err(invalid("mu", mu, "cannot exceed L"));
    }
    let lambda = theorem4_lambda(mu, l, rho, alpha);
    if !(lambda_tilde > 0.0 && lambda_tilde < lambda) {
        return Err(invalid("lambda_tilde", lambda_tilde, "must lie in (0, lambda)"));
    }
    let eta = alpha * (mu / l).cbrt() * (1.0 - rho * rho).powi(2) / 14.0 / l;
    let radius = RadiusRule::Geometric {
        scale: positive("u_scale", u_scale)?,
        ratio: lambda_tilde,
    };
    Ok(Schedule {
        kind: ScheduleKind::Theorem4 {
            alpha,
            lambda,
            lambda_tilde,
        },
        step: PowerDecay::constant(eta),
        radius,
    })
}
