use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use super::TimeGrid;

/// Base-measure (`Q`) model of the risky asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum QModel {
    /// `S_t = s0 + W_t` under Q.
    ArithmeticBm { s0: f64 },
    /// `S_t = s0 + N_t - intensity * t` under Q, `N` a Poisson process.
    CompensatedPoisson { s0: f64, intensity: f64 },
    /// `S_t = s0 + int sigma_u dW_u` with lognormal spot volatility
    /// `d sigma = vol_of_vol * sigma dB`, independent of `W`.
    StochVolToy {
        s0: f64,
        vol0: f64,
        vol_of_vol: f64,
    },
    /// Bounded bubble: a nonnegative local martingale pinned at or below
    /// `eps < 1` from the horizon on. Bound dispatch only, no simulator.
    BoundedBubbleToy { s0: f64, eps: f64 },
}

impl QModel {
    pub fn s0(&self) -> f64 {
        match self {
            QModel::ArithmeticBm { s0 }
            | QModel::CompensatedPoisson { s0, .. }
            | QModel::StochVolToy { s0, .. }
            | QModel::BoundedBubbleToy { s0, .. } => *s0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QModel::ArithmeticBm { .. } => "arithmetic_bm",
            QModel::CompensatedPoisson { .. } => "compensated_poisson",
            QModel::StochVolToy { .. } => "stoch_vol_toy",
            QModel::BoundedBubbleToy { .. } => "bounded_bubble_toy",
        }
    }
}

/// First-passage rule defining the stopping time `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StoppingRule {
    /// `sigma = inf{t > 0 : S_t <= 0}`.
    HitZero,
    /// `sigma = inf{t >= 0 : S_t <= alpha * t}`, `alpha > 0`.
    HitLine { alpha: f64 },
    /// `sigma = inf{t >= 0 : S_t > cap}`, `cap > s0`.
    ExceedCap { cap: f64 },
    /// `sigma = inf{t > 0 : vol_t <= sigma_lo}`.
    VolFloor { sigma_lo: f64 },
    /// `sigma = inf{t > 0 : [S]_t <= -a + b t}`, `a, b > 0`.
    BracketLine { a: f64, b: f64 },
    /// Minimum of two stopping times.
    MinOf {
        first: Box<StoppingRule>,
        second: Box<StoppingRule>,
    },
}

impl StoppingRule {
    pub fn name(&self) -> &'static str {
        match self {
            StoppingRule::HitZero => "hit_zero",
            StoppingRule::HitLine { .. } => "hit_line",
            StoppingRule::ExceedCap { .. } => "exceed_cap",
            StoppingRule::VolFloor { .. } => "vol_floor",
            StoppingRule::BracketLine { .. } => "bracket_line",
            StoppingRule::MinOf { .. } => "min_of",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            StoppingRule::HitZero => 0,
            StoppingRule::HitLine { .. } => 1,
            StoppingRule::ExceedCap { .. } => 2,
            StoppingRule::VolFloor { .. } => 3,
            StoppingRule::BracketLine { .. } => 4,
            StoppingRule::MinOf { .. } => 5,
        }
    }
}

/// Complete description of one scenario: base model, stopping rule,
/// monitoring grid, and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub label: String,
    pub model: QModel,
    pub stopping: StoppingRule,
    pub grid: TimeGrid,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Stable 64-bit content hash (FNV-1a over a canonical field encoding).
    /// Used to key cached bundles and to stamp reports.
    pub fn stable_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        fn eat_rule(rule: &StoppingRule, eat: &mut dyn FnMut(&[u8])) {
            eat(&[rule.rank()]);
            match rule {
                StoppingRule::HitZero => {}
                StoppingRule::HitLine { alpha } => eat(&alpha.to_le_bytes()),
                StoppingRule::ExceedCap { cap } => eat(&cap.to_le_bytes()),
                StoppingRule::VolFloor { sigma_lo } => eat(&sigma_lo.to_le_bytes()),
                StoppingRule::BracketLine { a, b } => {
                    eat(&a.to_le_bytes());
                    eat(&b.to_le_bytes());
                }
                StoppingRule::MinOf { first, second } => {
                    eat_rule(first, eat);
                    eat_rule(second, eat);
                }
            }
        }
        match &self.model {
            QModel::ArithmeticBm { s0 } => {
                eat(&[1]);
                eat(&s0.to_le_bytes());
            }
            QModel::CompensatedPoisson { s0, intensity } => {
                eat(&[2]);
                eat(&s0.to_le_bytes());
                eat(&intensity.to_le_bytes());
            }
            QModel::StochVolToy {
                s0,
                vol0,
                vol_of_vol,
            } => {
                eat(&[3]);
                eat(&s0.to_le_bytes());
                eat(&vol0.to_le_bytes());
                eat(&vol_of_vol.to_le_bytes());
            }
            QModel::BoundedBubbleToy { s0, eps } => {
                eat(&[4]);
                eat(&s0.to_le_bytes());
                eat(&eps.to_le_bytes());
            }
        }
        eat_rule(&self.stopping, &mut eat);
        eat(&self.grid.horizon().to_le_bytes());
        eat(&(self.grid.n_steps() as u64).to_le_bytes());
        eat(&self.seed.to_le_bytes());
        h
    }
}

/// What the engine can do with a validated scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Q simulation, direct P simulation, weighted-Q representation,
    /// closed-form kernels.
    Full,
    /// Q simulation plus a superhedging upper bound; no P representation.
    QSideAndBound,
    /// Superhedging bound only; no simulator.
    BoundOnly,
}

/// A scenario that passed validation, with its support level and any
/// non-fatal warnings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validated {
    pub spec: ScenarioSpec,
    pub support: Support,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationError {
    InvalidModel(String),
    InvalidStopping(String),
    UnsupportedPair { model: String, stopping: String },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::InvalidModel(m) => write!(f, "invalid model: {m}"),
            ValidationError::InvalidStopping(m) => write!(f, "invalid stopping rule: {m}"),
            ValidationError::UnsupportedPair { model, stopping } => write!(
                f,
                "unsupported (model, stopping) pair: ({model}, {stopping}); see the supported \
                 combinations in the documentation"
            ),
        }
    }
}

impl core::error::Error for ValidationError {}

fn check_model(model: &QModel) -> Result<(), ValidationError> {
    let s0 = model.s0();
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(ValidationError::InvalidModel(format!(
            "s0 must be positive and finite, got {s0}"
        )));
    }
    match model {
        QModel::CompensatedPoisson { intensity, .. } => {
            if !(*intensity > 0.0) || !intensity.is_finite() {
                return Err(ValidationError::InvalidModel(format!(
                    "intensity must be positive, got {intensity}"
                )));
            }
        }
        QModel::StochVolToy {
            vol0, vol_of_vol, ..
        } => {
            if !(*vol0 > 0.0) {
                return Err(ValidationError::InvalidModel(format!(
                    "vol0 must be positive, got {vol0}"
                )));
            }
            if !(*vol_of_vol > 0.0) {
                return Err(ValidationError::InvalidModel(format!(
                    "vol_of_vol must be positive, got {vol_of_vol}"
                )));
            }
        }
        QModel::BoundedBubbleToy { eps, .. } => {
            if !(0.0..1.0).contains(eps) {
                return Err(ValidationError::InvalidModel(format!(
                    "bubble eps must lie in [0, 1), got {eps}"
                )));
            }
        }
        QModel::ArithmeticBm { .. } => {}
    }
    Ok(())
}

/// Checks a scenario against the supported (model, stopping) combinations
/// and the per-example parameter constraints, returning the normalized
/// scenario together with its support level.
///
/// Supported pairs:
/// - (`ArithmeticBm`, `HitZero`) and (`ArithmeticBm`, `HitLine`): full
///   support including closed-form kernels and direct P simulation.
/// - (`CompensatedPoisson`, `HitZero`): full support, event-driven.
/// - (`CompensatedPoisson`, `HitLine`): jumpy incomplete-market bound only.
/// - (`StochVolToy`, `VolFloor` min `HitZero`) and (`StochVolToy`,
///   `BracketLine`): Q-side simulation plus a bound.
/// - (`BoundedBubbleToy`, `ExceedCap`): bound only.
pub fn validate_scenario(spec: ScenarioSpec) -> Result<Validated, ValidationError> {
    check_model(&spec.model)?;
    let mut spec = spec;
    let mut warnings = Vec::new();
    let horizon = spec.grid.horizon();
    let s0 = spec.model.s0();

    // Normalize MinOf ordering so equivalent scenarios hash identically.
    if let StoppingRule::MinOf { first, second } = &spec.stopping {
        if first.rank() > second.rank() {
            spec.stopping = StoppingRule::MinOf {
                first: second.clone(),
                second: first.clone(),
            };
        }
    }

    let unsupported = |spec: &ScenarioSpec| ValidationError::UnsupportedPair {
        model: spec.model.name().to_owned(),
        stopping: spec.stopping.name().to_owned(),
    };

    let support = match (&spec.model, &spec.stopping) {
        (QModel::ArithmeticBm { .. }, StoppingRule::HitZero) => Support::Full,
        (QModel::ArithmeticBm { .. }, StoppingRule::HitLine { alpha }) => {
            if !(*alpha > 0.0) {
                return Err(ValidationError::InvalidStopping(format!(
                    "hit_line requires alpha > 0, got {alpha}"
                )));
            }
            Support::Full
        }
        (QModel::CompensatedPoisson { intensity, .. }, StoppingRule::HitZero) => {
            if intensity * horizon <= s0 {
                warnings.push(format!(
                    "no optimal-arbitrage claim: requires intensity * T > s0 \
                     ({intensity} * {horizon} <= {s0}); the superhedging price of the \
                     survival claim equals 1"
                ));
            }
            Support::Full
        }
        (QModel::CompensatedPoisson { .. }, StoppingRule::HitLine { alpha }) => {
            if !(*alpha > 0.0) {
                return Err(ValidationError::InvalidStopping(format!(
                    "hit_line requires alpha > 0, got {alpha}"
                )));
            }
            if s0 != 1.0 {
                return Err(ValidationError::InvalidModel(
                    "the incomplete-market line bound is stated for s0 = 1".into(),
                ));
            }
            if !(alpha * horizon / 2.0 > 1.0) {
                return Err(ValidationError::InvalidStopping(format!(
                    "the incomplete-market line bound requires alpha * T / 2 > 1, got \
                     {alpha} * {horizon} / 2 = {}",
                    alpha * horizon / 2.0
                )));
            }
            Support::BoundOnly
        }
        (
            QModel::StochVolToy { vol0, .. },
            StoppingRule::MinOf { first, second },
        ) => match (first.as_ref(), second.as_ref()) {
            (StoppingRule::HitZero, StoppingRule::VolFloor { sigma_lo }) => {
                if !(*sigma_lo > 0.0) {
                    return Err(ValidationError::InvalidStopping(format!(
                        "vol_floor requires sigma_lo > 0, got {sigma_lo}"
                    )));
                }
                if !(sigma_lo < vol0) {
                    return Err(ValidationError::InvalidStopping(format!(
                        "vol_floor requires sigma_lo < vol0, got {sigma_lo} >= {vol0}"
                    )));
                }
                Support::QSideAndBound
            }
            _ => return Err(unsupported(&spec)),
        },
        (QModel::StochVolToy { .. }, StoppingRule::BracketLine { a, b }) => {
            if !(*a > 0.0) || !(*b > 0.0) {
                return Err(ValidationError::InvalidStopping(format!(
                    "bracket_line requires a > 0 and b > 0, got a = {a}, b = {b}"
                )));
            }
            if !(b * horizon - a > 0.0) {
                return Err(ValidationError::InvalidStopping(format!(
                    "bracket_line bound requires b * T - a > 0, got {}",
                    b * horizon - a
                )));
            }
            Support::QSideAndBound
        }
        (QModel::BoundedBubbleToy { .. }, StoppingRule::ExceedCap { cap }) => {
            if !(*cap > s0) {
                return Err(ValidationError::InvalidStopping(format!(
                    "exceed_cap requires cap > s0, got cap = {cap}, s0 = {s0}"
                )));
            }
            Support::BoundOnly
        }
        _ => return Err(unsupported(&spec)),
    };

    Ok(Validated {
        spec,
        support,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(model: QModel, stopping: StoppingRule, horizon: f64) -> ScenarioSpec {
        ScenarioSpec {
            label: "test".into(),
            model,
            stopping,
            grid: TimeGrid::uniform(horizon, 16).unwrap(),
            seed: 1,
        }
    }

    #[test]
    fn poisson_horizon_warning() {
        let ok = validate_scenario(scenario(
            QModel::CompensatedPoisson {
                s0: 1.0,
                intensity: 1.0,
            },
            StoppingRule::HitZero,
            2.0,
        ))
        .unwrap();
        assert!(ok.warnings.is_empty());
        assert_eq!(ok.support, Support::Full);

        let warned = validate_scenario(scenario(
            QModel::CompensatedPoisson {
                s0: 1.0,
                intensity: 1.0,
            },
            StoppingRule::HitZero,
            0.5,
        ))
        .unwrap();
        assert_eq!(warned.warnings.len(), 1);
        assert!(warned.warnings[0].contains("no optimal-arbitrage claim"));
    }

    #[test]
    fn negative_slope_rejected() {
        let err = validate_scenario(scenario(
            QModel::ArithmeticBm { s0: 1.0 },
            StoppingRule::HitLine { alpha: -1.0 },
            1.0,
        ))
        .unwrap_err();
        assert!(matches!(err, ValidationError::InvalidStopping(_)));
    }

    #[test]
    fn unsupported_pair_rejected() {
        let err = validate_scenario(scenario(
            QModel::ArithmeticBm { s0: 1.0 },
            StoppingRule::ExceedCap { cap: 2.0 },
            1.0,
        ))
        .unwrap_err();
        assert!(matches!(err, ValidationError::UnsupportedPair { .. }));
    }

    #[test]
    fn incomplete_line_needs_wide_margin() {
        let poisson = QModel::CompensatedPoisson {
            s0: 1.0,
            intensity: 1.0,
        };
        // a*T/2 = 2 > 1: accepted as bound-only.
        let v = validate_scenario(scenario(
            poisson.clone(),
            StoppingRule::HitLine { alpha: 4.0 },
            1.0,
        ))
        .unwrap();
        assert_eq!(v.support, Support::BoundOnly);
        // a*T/2 = 1: rejected.
        assert!(validate_scenario(scenario(
            poisson,
            StoppingRule::HitLine { alpha: 2.0 },
            1.0,
        ))
        .is_err());
    }

    #[test]
    fn min_of_is_normalized() {
        let v = validate_scenario(scenario(
            QModel::StochVolToy {
                s0: 1.0,
                vol0: 1.5,
                vol_of_vol: 0.5,
            },
            StoppingRule::MinOf {
                first: Box::new(StoppingRule::VolFloor { sigma_lo: 1.0 }),
                second: Box::new(StoppingRule::HitZero),
            },
            1.0,
        ))
        .unwrap();
        match v.spec.stopping {
            StoppingRule::MinOf { first, .. } => {
                assert_eq!(*first, StoppingRule::HitZero)
            }
            _ => panic!("expected MinOf"),
        }
    }

    #[test]
    fn bubble_cap_must_exceed_s0() {
        let err = validate_scenario(scenario(
            QModel::BoundedBubbleToy { s0: 1.0, eps: 0.5 },
            StoppingRule::ExceedCap { cap: 0.9 },
            1.0,
        ))
        .unwrap_err();
        assert!(matches!(err, ValidationError::InvalidStopping(_)));
    }

    #[test]
    fn stable_hash_distinguishes_scenarios() {
        let a = scenario(QModel::ArithmeticBm { s0: 1.0 }, StoppingRule::HitZero, 1.0);
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.stable_hash(), b.stable_hash());
        assert_eq!(a.stable_hash(), a.clone().stable_hash());
    }
}
