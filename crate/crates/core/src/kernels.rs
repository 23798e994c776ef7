//! Closed-form kernels for the explicit examples: conditional survival
//! probabilities, their space derivatives (hedge ratios), the conditioning
//! density `M`, the Girsanov drift of the conditioned dynamics, and the
//! tilted Poisson jump intensity.

use alloc::format;
use alloc::string::String;
use core::fmt;

use crate::float::{exp, sqrt};
use crate::model::{PathRecord, QModel, StoppingRule, TimeGrid, Validated};
use crate::special::{exp_mul_norm_cdf, norm_cdf, norm_pdf, FRAC_1_SQRT_2PI};

/// sqrt(2/pi)
const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelError {
    Domain(String),
    Singular(String),
    Unsupported(String),
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::Domain(m) => write!(f, "domain error: {m}"),
            KernelError::Singular(m) => write!(f, "singularity: {m}"),
            KernelError::Unsupported(m) => write!(f, "unsupported: {m}"),
        }
    }
}

impl core::error::Error for KernelError {}

fn check_time(t: f64, horizon: f64) -> Result<(), KernelError> {
    if !(0.0..horizon).contains(&t) {
        return Err(KernelError::Domain(format!(
            "time must satisfy 0 <= t < T, got t = {t}, T = {horizon}"
        )));
    }
    Ok(())
}

/// `Q[sigma > T | S_t = s]` for Brownian motion stopped at zero:
/// `1 - 2 Phi(-s / sqrt(T - t))`, and 0 at or below the barrier.
pub fn survival_bm_zero(t: f64, s: f64, horizon: f64) -> Result<f64, KernelError> {
    check_time(t, horizon)?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    // 1 - 2 Phi(-x) = erf(x / sqrt(2)); the erf form is exact near zero.
    Ok(crate::special::erf(
        s / (crate::special::SQRT_2 * sqrt(horizon - t)),
    ))
}

/// `Q[sigma > T | S_t = s]` for Brownian motion stopped at the line
/// `alpha * t` (reflection formula), and 0 at or below the line.
pub fn survival_bm_line(t: f64, s: f64, horizon: f64, alpha: f64) -> Result<f64, KernelError> {
    check_time(t, horizon)?;
    if !(alpha > 0.0) {
        return Err(KernelError::Domain(format!(
            "line slope must be positive, got {alpha}"
        )));
    }
    let d = s - alpha * t;
    if d <= 0.0 {
        return Ok(0.0);
    }
    let rt = sqrt(horizon - t);
    let y1 = (s - alpha * horizon) / rt;
    let y2 = (-s + 2.0 * alpha * t - alpha * horizon) / rt;
    let v = norm_cdf(y1) - exp_mul_norm_cdf(2.0 * alpha * d, y2);
    // The reflection difference can round to a tiny negative in the far
    // stopped tail; clamp to the closed range of a probability.
    Ok(v.clamp(0.0, 1.0))
}

/// Hedge ratio (space derivative of `survival_bm_zero`):
/// `sqrt(2/pi) exp(-s^2 / (2(T-t))) / sqrt(T-t)` while alive, 0 after the
/// stop.
pub fn hedge_bm_zero(t: f64, s: f64, horizon: f64) -> Result<f64, KernelError> {
    check_time(t, horizon)?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    let u = horizon - t;
    Ok(SQRT_2_OVER_PI * exp(-s * s / (2.0 * u)) / sqrt(u))
}

/// Hedge ratio (space derivative of `survival_bm_line`) while alive, 0
/// after the stop.
pub fn hedge_bm_line(t: f64, s: f64, horizon: f64, alpha: f64) -> Result<f64, KernelError> {
    check_time(t, horizon)?;
    if !(alpha > 0.0) {
        return Err(KernelError::Domain(format!(
            "line slope must be positive, got {alpha}"
        )));
    }
    let d = s - alpha * t;
    if d <= 0.0 {
        return Ok(0.0);
    }
    let rt = sqrt(horizon - t);
    let y1 = (s - alpha * horizon) / rt;
    let y2 = (-s + 2.0 * alpha * t - alpha * horizon) / rt;
    let g = 2.0 * alpha * d;
    // exp(g) * pdf(y2) with the exponents combined before a single exp.
    let tilted_pdf = FRAC_1_SQRT_2PI * exp(g - 0.5 * y2 * y2);
    Ok(norm_pdf(y1) / rt + tilted_pdf / rt - 2.0 * alpha * exp_mul_norm_cdf(g, y2))
}

/// Survival-probability kernel bound to one scenario variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurvivalKernel {
    BmZero { horizon: f64 },
    BmLine { horizon: f64, alpha: f64 },
}

impl SurvivalKernel {
    /// Kernel for a validated Brownian scenario; other scenarios have no
    /// closed-form conditional law.
    pub fn for_scenario(v: &Validated) -> Result<Self, KernelError> {
        let horizon = v.spec.grid.horizon();
        match (&v.spec.model, &v.spec.stopping) {
            (QModel::ArithmeticBm { .. }, StoppingRule::HitZero) => {
                Ok(SurvivalKernel::BmZero { horizon })
            }
            (QModel::ArithmeticBm { .. }, StoppingRule::HitLine { alpha }) => {
                Ok(SurvivalKernel::BmLine {
                    horizon,
                    alpha: *alpha,
                })
            }
            _ => Err(KernelError::Unsupported(format!(
                "no closed-form survival kernel for ({}, {})",
                v.spec.model.name(),
                v.spec.stopping.name()
            ))),
        }
    }

    pub fn horizon(&self) -> f64 {
        match self {
            SurvivalKernel::BmZero { horizon } | SurvivalKernel::BmLine { horizon, .. } => {
                *horizon
            }
        }
    }

    /// Stopping boundary level at time `t`.
    pub fn boundary(&self, t: f64) -> f64 {
        match self {
            SurvivalKernel::BmZero { .. } => 0.0,
            SurvivalKernel::BmLine { alpha, .. } => alpha * t,
        }
    }

    /// `Q[sigma > T | F_t]` as a function of the state.
    pub fn value(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        match self {
            SurvivalKernel::BmZero { horizon } => survival_bm_zero(t, s, *horizon),
            SurvivalKernel::BmLine { horizon, alpha } => {
                survival_bm_line(t, s, *horizon, *alpha)
            }
        }
    }

    /// Space derivative of `value`; the replicating position in the asset.
    pub fn delta(&self, t: f64, s: f64) -> Result<f64, KernelError> {
        match self {
            SurvivalKernel::BmZero { horizon } => hedge_bm_zero(t, s, *horizon),
            SurvivalKernel::BmLine { horizon, alpha } => hedge_bm_line(t, s, *horizon, *alpha),
        }
    }
}

/// Girsanov drift of the conditioned diffusion, `delta / value`.
///
/// Algebraically identical to the normalized form
/// `delta / (M_t * Q[sigma > T])` after the normalizer cancels, so neither
/// `Q[sigma > T]` nor `M` is computed separately.
pub fn girsanov_drift(kernel: &SurvivalKernel, t: f64, s: f64) -> Result<f64, KernelError> {
    let value = kernel.value(t, s)?;
    if value <= 0.0 {
        return Err(KernelError::Singular(format!(
            "survival probability vanishes at (t = {t}, s = {s}); the conditioned dynamics \
             are undefined at the boundary"
        )));
    }
    Ok(kernel.delta(t, s)? / value)
}

/// Jump intensity of the compensated Poisson asset under the conditioned
/// measure: `base * (s + 1) / s` just before a jump from state `s`.
///
/// This is the h-transform induced by the density `M_t = S_{t and tau}/s0`:
/// a jump lifts `S` from `s` to `s + 1`, so the intensity is tilted by the
/// ratio of densities across the jump.
pub fn poisson_p_intensity(s_minus: f64, base_intensity: f64) -> Result<f64, KernelError> {
    if !(s_minus > 0.0) {
        return Err(KernelError::Domain(format!(
            "pre-jump state must be positive, got {s_minus}"
        )));
    }
    Ok(base_intensity * (s_minus + 1.0) / s_minus)
}

/// The conditioning density process `M_t = Q[sigma > T | F_t]/Q[sigma > T]`
/// evaluated along sampled paths (`M_t = S_{t and tau}/s0` for the Poisson
/// scenario).
#[derive(Debug, Clone, PartialEq)]
pub enum DensityProcess {
    Survival {
        kernel: SurvivalKernel,
        normalizer: f64,
    },
    Poisson {
        s0: f64,
    },
}

impl DensityProcess {
    pub fn for_scenario(v: &Validated) -> Result<Self, KernelError> {
        match &v.spec.model {
            QModel::ArithmeticBm { s0 } => {
                let kernel = SurvivalKernel::for_scenario(v)?;
                let normalizer = kernel.value(0.0, *s0)?;
                if normalizer <= 0.0 {
                    return Err(KernelError::Singular(
                        "Q[sigma > T] = 0: the conditioning event is null".into(),
                    ));
                }
                Ok(DensityProcess::Survival { kernel, normalizer })
            }
            QModel::CompensatedPoisson { s0, .. } => {
                if !matches!(v.spec.stopping, StoppingRule::HitZero) {
                    return Err(KernelError::Unsupported(
                        "the Poisson density requires the hit-zero stopping rule".into(),
                    ));
                }
                Ok(DensityProcess::Poisson { s0: *s0 })
            }
            _ => Err(KernelError::Unsupported(format!(
                "no density process for model {}",
                v.spec.model.name()
            ))),
        }
    }

    /// `Q[sigma > T]`, the normalizing constant.
    pub fn normalizer(&self) -> Option<f64> {
        match self {
            DensityProcess::Survival { normalizer, .. } => Some(*normalizer),
            DensityProcess::Poisson { .. } => None,
        }
    }

    /// `M` at grid node `i` of a sampled path. At the horizon the
    /// conditional probability collapses to the survival indicator, so
    /// `M_T = 1_{tau > T} / Q[sigma > T]` for the diffusion kernels.
    pub fn m_at_node(
        &self,
        i: usize,
        record: &PathRecord,
        grid: &TimeGrid,
    ) -> Result<f64, KernelError> {
        let t = grid.time(i);
        match self {
            DensityProcess::Survival { kernel, normalizer } => {
                if record.tau.occurred_by(t) {
                    return Ok(0.0);
                }
                if i == grid.n_steps() {
                    return Ok(1.0 / normalizer);
                }
                Ok(kernel.value(t, record.values[i])? / normalizer)
            }
            DensityProcess::Poisson { s0 } => {
                if record.tau.occurred_by(t) {
                    return Ok(0.0);
                }
                Ok(record.values[i] / s0)
            }
        }
    }

    /// `M_T`: the weight a Q-path carries in the weighted representation of
    /// the conditioned measure.
    pub fn terminal_weight(
        &self,
        record: &PathRecord,
        grid: &TimeGrid,
    ) -> Result<f64, KernelError> {
        self.m_at_node(grid.n_steps(), record, grid)
    }
}

/// `M` at an arbitrary grid time `t` of a sampled path (`t` must be a node
/// of the scenario grid).
pub fn density_m(
    t: f64,
    record: &PathRecord,
    v: &Validated,
) -> Result<f64, KernelError> {
    let grid = &v.spec.grid;
    let rel = t / grid.horizon() * grid.n_steps() as f64;
    let i = libm::round(rel) as usize;
    if i > grid.n_steps() || crate::float::abs(rel - i as f64) > 1e-9 {
        return Err(KernelError::Domain(format!(
            "t = {t} is not a node of the scenario grid"
        )));
    }
    DensityProcess::for_scenario(v)?.m_at_node(i, record, grid)
}
