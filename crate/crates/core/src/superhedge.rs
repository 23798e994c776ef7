//! Superhedging prices of the survival claim in the complete examples and
//! upper bounds for the incomplete ones. Prices are exact (closed form or
//! exact-law Monte Carlo); incomplete markets only ever get bounds, and the
//! `kind` field keeps that machine-readable.

use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::float::{exp, sqrt};
use crate::kernels::{survival_bm_line, survival_bm_zero};
use crate::model::{QModel, ScenarioSpec, StoppingRule, TimeGrid, Validated};
use crate::simulate::{self, PathExecutor};
use crate::special::norm_cdf;
use crate::stats::McEstimate;

#[derive(Debug, Clone, PartialEq)]
pub enum SuperhedgeError {
    Domain(String),
    Sim(String),
    Unsupported(String),
}

impl fmt::Display for SuperhedgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuperhedgeError::Domain(m) => write!(f, "domain error: {m}"),
            SuperhedgeError::Sim(m) => write!(f, "simulation error: {m}"),
            SuperhedgeError::Unsupported(m) => write!(f, "unsupported: {m}"),
        }
    }
}

impl core::error::Error for SuperhedgeError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceKind {
    ExactClosedForm,
    ExactMc,
    UpperBound,
}

/// Price (or upper bound) of the survival claim together with the implied
/// optimal arbitrage profit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperhedgeReport {
    pub scenario: String,
    pub price_or_bound: f64,
    pub kind: PriceKind,
    pub standard_error: Option<f64>,
    /// `1 / price_or_bound` (a lower bound on the optimal profit when the
    /// price itself is only an upper bound).
    pub implied_u: f64,
    /// For the Poisson scenario: the coarser analytic bound
    /// `Q[S_T > 0]`, which strictly contains the survival event because
    /// stopped paths may rebound.
    pub analytic_upper_bound: Option<f64>,
    pub note: String,
}

impl SuperhedgeReport {
    fn build(
        scenario: impl Into<String>,
        price: f64,
        kind: PriceKind,
        se: Option<f64>,
        note: impl Into<String>,
    ) -> Result<Self, SuperhedgeError> {
        if !(price > 0.0 && price <= 1.0) {
            return Err(SuperhedgeError::Domain(format!(
                "price or bound must lie in (0, 1], got {price}"
            )));
        }
        Ok(SuperhedgeReport {
            scenario: scenario.into(),
            price_or_bound: price,
            kind,
            standard_error: se,
            implied_u: 1.0 / price,
            analytic_upper_bound: None,
            note: note.into(),
        })
    }
}

/// Exact price for Brownian motion stopped at zero, `1 - 2 Phi(-1/sqrt(T))`
/// (unit initial value).
pub fn sp_bm_zero(horizon: f64) -> Result<SuperhedgeReport, SuperhedgeError> {
    if !(horizon > 0.0) {
        return Err(SuperhedgeError::Domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let price = survival_bm_zero(0.0, 1.0, horizon).map_err(|e| SuperhedgeError::Domain(format!("{e}")))?;
    SuperhedgeReport::build(
        format!("bm_zero T={horizon}"),
        price,
        PriceKind::ExactClosedForm,
        None,
        "complete market: price equals Q[sigma > T]",
    )
}

/// Exact price for Brownian motion stopped at the line `alpha * t` (unit
/// initial value).
pub fn sp_bm_line(horizon: f64, alpha: f64) -> Result<SuperhedgeReport, SuperhedgeError> {
    if !(horizon > 0.0) {
        return Err(SuperhedgeError::Domain(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let price = survival_bm_line(0.0, 1.0, horizon, alpha)
        .map_err(|e| SuperhedgeError::Domain(format!("{e}")))?;
    SuperhedgeReport::build(
        format!("bm_line T={horizon} alpha={alpha}"),
        price,
        PriceKind::ExactClosedForm,
        None,
        "complete market: reflection formula for the line barrier",
    )
}

/// `Q[S_T > 0]` for the compensated Poisson asset, from the Poisson
/// distribution function.
pub fn poisson_terminal_positive(s0: f64, intensity: f64, horizon: f64) -> f64 {
    let mean = intensity * horizon;
    let threshold = mean - s0;
    if threshold < 0.0 {
        return 1.0;
    }
    // S_T > 0 iff N_T > mean - s0 iff N_T >= floor(threshold) + 1.
    let k_min = libm::floor(threshold) as u64 + 1;
    let mut pmf = exp(-mean);
    let mut cdf = pmf;
    for k in 1..k_min {
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    1.0 - cdf
}

/// Monte-Carlo price of the survival claim for the Poisson scenario:
/// `Q[tau > T]` from exact event-driven paths, with the analytic
/// `Q[S_T > 0]` bound attached as metadata.
pub fn sp_poisson(
    horizon: f64,
    n_paths: u64,
    seed: u64,
    exec: &dyn PathExecutor,
) -> Result<SuperhedgeReport, SuperhedgeError> {
    let spec = ScenarioSpec {
        label: format!("poisson T={horizon}"),
        model: QModel::CompensatedPoisson {
            s0: 1.0,
            intensity: 1.0,
        },
        stopping: StoppingRule::HitZero,
        grid: TimeGrid::uniform(horizon, 16).map_err(|e| SuperhedgeError::Domain(format!("{e}")))?,
        seed,
    };
    let v = crate::model::validate_scenario(spec)
        .map_err(|e| SuperhedgeError::Domain(format!("{e}")))?;
    sp_poisson_scenario(&v, n_paths, exec)
}

/// Scenario-driven variant of [`sp_poisson`].
pub fn sp_poisson_scenario(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<SuperhedgeReport, SuperhedgeError> {
    let (s0, intensity) = match &v.spec.model {
        QModel::CompensatedPoisson { s0, intensity } => (*s0, *intensity),
        _ => {
            return Err(SuperhedgeError::Unsupported(
                "sp_poisson needs a compensated Poisson scenario".into(),
            ))
        }
    };
    let est = simulate::estimate_survival(v, n_paths, exec)
        .map_err(|e| SuperhedgeError::Sim(format!("{e}")))?;
    if !(est.value > 0.0) {
        return Err(SuperhedgeError::Sim(
            "survival estimate degenerated to zero; increase n_paths".into(),
        ));
    }
    let horizon = v.spec.grid.horizon();
    let mut report = SuperhedgeReport::build(
        v.spec.label.clone(),
        est.value,
        PriceKind::ExactMc,
        Some(est.se),
        "exact event-driven Monte Carlo of Q[tau > T]",
    )?;
    report.analytic_upper_bound = Some(poisson_terminal_positive(s0, intensity, horizon));
    Ok(report)
}

/// Incomplete-market bound for a nonnegative local martingale bet on
/// staying above the line `a t`: `2 / (a T)`, valid when `a T / 2 > 1`.
pub fn bound_incomplete_line(a: f64, horizon: f64) -> Result<SuperhedgeReport, SuperhedgeError> {
    if !(a * horizon / 2.0 > 1.0) {
        return Err(SuperhedgeError::Domain(format!(
            "the bound requires a * T / 2 > 1, got {}",
            a * horizon / 2.0
        )));
    }
    SuperhedgeReport::build(
        format!("incomplete_line a={a} T={horizon}"),
        2.0 / (a * horizon),
        PriceKind::UpperBound,
        None,
        "Markov inequality on the supermartingale at T/2",
    )
}

/// Bound for the capped-bubble bet: `1 - (1 - eps)/K`.
pub fn bound_bubble(cap: f64, eps: f64) -> Result<SuperhedgeReport, SuperhedgeError> {
    if !(cap > 1.0) {
        return Err(SuperhedgeError::Domain(format!(
            "the bubble bound requires cap > 1, got {cap}"
        )));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(SuperhedgeError::Domain(format!(
            "the bubble bound requires 0 <= eps < 1, got {eps}"
        )));
    }
    SuperhedgeReport::build(
        format!("bubble K={cap} eps={eps}"),
        1.0 - (1.0 - eps) / cap,
        PriceKind::UpperBound,
        None,
        "optional stopping of the capped martingale",
    )
}

/// Bound for the joint asset/volatility bet:
/// `1 - 2 Phi(-1 / (sigma_lo sqrt(T)))` via the running-minimum law of the
/// time-changed Brownian motion.
pub fn bound_volbet(sigma_lo: f64, horizon: f64) -> Result<SuperhedgeReport, SuperhedgeError> {
    if !(sigma_lo > 0.0) || !(horizon > 0.0) {
        return Err(SuperhedgeError::Domain(format!(
            "the volatility bound requires sigma_lo > 0 and T > 0, got {sigma_lo}, {horizon}"
        )));
    }
    let price = 1.0 - 2.0 * norm_cdf(-1.0 / (sigma_lo * sqrt(horizon)));
    SuperhedgeReport::build(
        format!("volbet sigma_lo={sigma_lo} T={horizon}"),
        price,
        PriceKind::UpperBound,
        None,
        "running-minimum law under the volatility floor",
    )
}

/// Bound for the quadratic-variation bracket bet:
/// `1 - 2 Phi(-1 / sqrt(b T - a))`.
pub fn bound_bracket(a: f64, b: f64, horizon: f64) -> Result<SuperhedgeReport, SuperhedgeError> {
    let u = b * horizon - a;
    if !(u > 0.0) {
        return Err(SuperhedgeError::Domain(format!(
            "the bracket bound requires b * T - a > 0, got {u}"
        )));
    }
    let price = 1.0 - 2.0 * norm_cdf(-1.0 / sqrt(u));
    SuperhedgeReport::build(
        format!("bracket a={a} b={b} T={horizon}"),
        price,
        PriceKind::UpperBound,
        None,
        "running-minimum law at the guaranteed quadratic variation",
    )
}

/// Price or bound for a validated scenario, dispatched on its
/// (model, stopping) pair. Monte-Carlo prices use the scenario seed.
pub fn price_scenario(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<SuperhedgeReport, SuperhedgeError> {
    let horizon = v.spec.grid.horizon();
    let s0 = v.spec.model.s0();
    match (&v.spec.model, &v.spec.stopping) {
        (QModel::ArithmeticBm { .. }, StoppingRule::HitZero) => {
            let price = survival_bm_zero(0.0, s0, horizon)
                .map_err(|e| SuperhedgeError::Domain(format!("{e}")))?;
            SuperhedgeReport::build(
                v.spec.label.clone(),
                price,
                PriceKind::ExactClosedForm,
                None,
                "complete market: price equals Q[sigma > T]",
            )
        }
        (QModel::ArithmeticBm { .. }, StoppingRule::HitLine { alpha }) => {
            let price = survival_bm_line(0.0, s0, horizon, *alpha)
                .map_err(|e| SuperhedgeError::Domain(format!("{e}")))?;
            SuperhedgeReport::build(
                v.spec.label.clone(),
                price,
                PriceKind::ExactClosedForm,
                None,
                "complete market: reflection formula for the line barrier",
            )
        }
        (QModel::CompensatedPoisson { .. }, StoppingRule::HitZero) => {
            sp_poisson_scenario(v, n_paths, exec)
        }
        (QModel::CompensatedPoisson { .. }, StoppingRule::HitLine { alpha }) => {
            bound_incomplete_line(*alpha, horizon).map(|mut r| {
                r.scenario = v.spec.label.clone();
                r
            })
        }
        (QModel::StochVolToy { .. }, StoppingRule::MinOf { second, .. }) => {
            if let StoppingRule::VolFloor { sigma_lo } = second.as_ref() {
                bound_volbet(*sigma_lo, horizon).map(|mut r| {
                    r.scenario = v.spec.label.clone();
                    r
                })
            } else {
                Err(SuperhedgeError::Unsupported(
                    "composite stopping without a volatility floor".into(),
                ))
            }
        }
        (QModel::StochVolToy { .. }, StoppingRule::BracketLine { a, b }) => {
            bound_bracket(*a, *b, horizon).map(|mut r| {
                r.scenario = v.spec.label.clone();
                r
            })
        }
        (QModel::BoundedBubbleToy { eps, .. }, StoppingRule::ExceedCap { cap }) => {
            bound_bubble(*cap, *eps).map(|mut r| {
                r.scenario = v.spec.label.clone();
                r
            })
        }
        _ => Err(SuperhedgeError::Unsupported(format!(
            "no pricing rule for ({}, {})",
            v.spec.model.name(),
            v.spec.stopping.name()
        ))),
    }
}

/// MC estimate of `Q[sigma > T]` for a scenario, for cross-checking closed
/// forms.
pub fn mc_survival(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<McEstimate, SuperhedgeError> {
    simulate::estimate_survival(v, n_paths, exec).map_err(|e| SuperhedgeError::Sim(format!("{e}")))
}

/// Q-bundle sanity numbers for the volatility-bet scenario: the estimated
/// `Q[sigma_1 <= T, sigma_2 > T]` (positivity backs the bound's standing
/// assumption) and `Q[sigma <= T]` against the bound's complement term.
pub fn volbet_assumption_check(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<(McEstimate, McEstimate, f64), SuperhedgeError> {
    let sigma_lo = match &v.spec.stopping {
        StoppingRule::MinOf { second, .. } => match second.as_ref() {
            StoppingRule::VolFloor { sigma_lo } => *sigma_lo,
            _ => {
                return Err(SuperhedgeError::Unsupported(
                    "volbet check needs the volatility-floor composite rule".into(),
                ))
            }
        },
        _ => {
            return Err(SuperhedgeError::Unsupported(
                "volbet check needs the volatility-floor composite rule".into(),
            ))
        }
    };
    let (joint, any) = simulate::estimate_joint_stop(v, n_paths, exec)
        .map_err(|e| SuperhedgeError::Sim(format!("{e}")))?;
    let complement = 2.0 * norm_cdf(-1.0 / (sigma_lo * sqrt(v.spec.grid.horizon())));
    Ok((joint, any, complement))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn closed_forms_match_reference() {
        let r = sp_bm_zero(1.0).unwrap();
        assert!(close(r.price_or_bound, 0.682_689_492_137_085_9, 1e-14));
        assert_eq!(r.kind, PriceKind::ExactClosedForm);
        assert_eq!(r.implied_u.to_bits(), (1.0 / r.price_or_bound).to_bits());

        let r4 = sp_bm_zero(4.0).unwrap();
        assert!(close(r4.price_or_bound, 0.382_924_922_548_026_2, 1e-14));

        // T -> 0+: no time to reach the barrier.
        let r0 = sp_bm_zero(1e-12).unwrap();
        assert!(r0.price_or_bound > 1.0 - 1e-12);

        let rl = sp_bm_line(1.0, 1.0).unwrap();
        assert!(close(rl.price_or_bound, 0.331_897_998_776_829_4, 1e-13));

        // Steep line: near-certain stop, tail-safe tiny price.
        let steep = sp_bm_line(1.0, 10.0).unwrap();
        assert!(steep.price_or_bound > 0.0 && steep.price_or_bound < 1e-6);

        // alpha -> 0 recovers the zero barrier.
        let flat = sp_bm_line(1.0, 1e-9).unwrap();
        assert!(close(flat.price_or_bound, 0.682_689_492_137_085_9, 1e-7));
    }

    #[test]
    fn bounds_match_reference() {
        assert!(close(
            bound_incomplete_line(4.0, 1.0).unwrap().price_or_bound,
            0.5,
            0.0
        ));
        let r = bound_incomplete_line(8.0, 1.0).unwrap();
        assert!(close(r.price_or_bound, 0.25, 0.0));
        assert!(r.implied_u >= 4.0);
        assert!(bound_incomplete_line(2.0, 1.0).is_err());

        assert!(close(
            bound_bubble(2.0, 0.5).unwrap().price_or_bound,
            0.75,
            1e-15
        ));
        assert!(close(
            bound_bubble(10.0, 0.0).unwrap().price_or_bound,
            0.9,
            1e-15
        ));
        // eps -> 1-: vacuous bound.
        assert!(bound_bubble(2.0, 1.0 - 1e-12).unwrap().price_or_bound > 1.0 - 1e-12);
        assert!(bound_bubble(0.9, 0.5).is_err());

        assert!(close(
            bound_volbet(1.0, 1.0).unwrap().price_or_bound,
            0.682_689_492_137_085_9,
            1e-14
        ));
        // sigma_lo -> 0+: vacuous bound.
        assert!(bound_volbet(1e-9, 1.0).unwrap().price_or_bound > 1.0 - 1e-12);

        assert!(close(
            bound_bracket(1.0, 2.0, 1.0).unwrap().price_or_bound,
            0.682_689_492_137_085_9,
            1e-14
        ));
        assert!(close(
            bound_bracket(0.0, 4.0, 1.0).unwrap().price_or_bound,
            0.382_924_922_548_026_2,
            1e-14
        ));
        // bT - a -> 0+: vacuous bound.
        assert!(bound_bracket(1.0, 1.0 + 1e-12, 1.0).unwrap().price_or_bound > 1.0 - 1e-6);
        assert!(bound_bracket(2.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn poisson_cdf_bound() {
        assert!(close(
            poisson_terminal_positive(1.0, 1.0, 2.0),
            0.593_994_150_290_161_9,
            1e-14
        ));
        // T < s0/intensity: the drift cannot reach zero by T.
        assert_eq!(poisson_terminal_positive(1.0, 1.0, 0.5), 1.0);
    }

    #[test]
    fn monotonicity_on_parameter_grids() {
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let t = 0.25 * i as f64;
            let p = sp_bm_zero(t).unwrap().price_or_bound;
            assert!(p < prev);
            prev = p;
        }
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let alpha = 0.25 * i as f64;
            let p = sp_bm_line(1.0, alpha).unwrap().price_or_bound;
            assert!(p < prev, "alpha = {alpha}");
            prev = p;
        }
        let mut prev = f64::INFINITY;
        for i in 1..=20 {
            let t = 0.5 + 0.25 * i as f64;
            let p = sp_bm_line(t, 1.0).unwrap().price_or_bound;
            assert!(p < prev, "T = {t}");
            prev = p;
        }
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let a = 3.0 + i as f64;
            let p = bound_incomplete_line(a, 1.0).unwrap().price_or_bound;
            assert!(p < prev);
            prev = p;
        }
    }
}
