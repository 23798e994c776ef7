use alloc::format;
use rand::Rng;

use crate::float::exp;

use super::{ModelError, PathRecord, QModel, StopTime, StoppingRule, TimeGrid};

/// Whether first-passage detection on discretely monitored diffusion paths
/// applies the Brownian-bridge crossing correction between nodes.
///
/// Discrete monitoring alone systematically misses crossings that revert
/// within a step, biasing survival probabilities upward. For a linear
/// barrier with node distances `d_i, d_{i+1} > 0` the bridge crossing
/// probability is `exp(-2 d_i d_{i+1} / (v^2 dt))` (exact for Brownian
/// paths), where `v` is the step volatility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeMode {
    None,
    BrownianBridge,
}

/// First time a Poisson path `s0 + N_t - intensity * t` reaches zero,
/// computed exactly from the jump times: between jumps the path declines
/// linearly, so the crossing time after the k-th jump is
/// `t_k + s_k / intensity`.
pub fn poisson_hit_zero(
    s0: f64,
    intensity: f64,
    jumps: &[f64],
    horizon: f64,
) -> StopTime {
    let mut t = 0.0;
    let mut s = s0;
    for &tj in jumps {
        let hit = t + s / intensity;
        if hit <= tj {
            return if hit <= horizon {
                StopTime::At(hit)
            } else {
                StopTime::Never
            };
        }
        s += 1.0 - intensity * (tj - t);
        t = tj;
    }
    let hit = t + s / intensity;
    if hit <= horizon {
        StopTime::At(hit)
    } else {
        StopTime::Never
    }
}

fn grid_first_passage<F>(
    record: &PathRecord,
    grid: &TimeGrid,
    bridge: BridgeMode,
    rng: &mut impl Rng,
    distance: F,
) -> StopTime
where
    F: Fn(usize, f64) -> f64,
{
    let n = grid.n_steps();
    let dt = grid.dt();
    let mut d_prev = distance(0, record.values[0]);
    if d_prev <= 0.0 {
        return StopTime::At(0.0);
    }
    for i in 1..=n {
        let d = distance(i, record.values[i]);
        if d <= 0.0 {
            return StopTime::At(grid.time(i));
        }
        if bridge == BridgeMode::BrownianBridge {
            let v = if record.vol.is_empty() {
                1.0
            } else {
                record.vol[i - 1]
            };
            let p_cross = exp(-2.0 * d_prev * d / (v * v * dt));
            if rng.gen::<f64>() < p_cross {
                // Crossed and reverted inside the step; report the right
                // endpoint of the straddled step.
                return StopTime::At(grid.time(i));
            }
        }
        d_prev = d;
    }
    StopTime::Never
}

/// First time the rule triggers on a sampled path, or `Never` on `[0, T]`.
///
/// Poisson paths with `HitZero` are resolved exactly from the jump times
/// (no discretization); diffusion barrier rules walk the grid with the
/// optional bridge correction; volatility and bracket rules are
/// grid-monitored. Bridge draws are consumed from `rng` in node order, so
/// the result is deterministic given the path's stream.
pub fn evaluate_stopping(
    record: &PathRecord,
    model: &QModel,
    rule: &StoppingRule,
    grid: &TimeGrid,
    bridge: BridgeMode,
    rng: &mut impl Rng,
) -> Result<StopTime, ModelError> {
    match rule {
        StoppingRule::HitZero => match model {
            QModel::CompensatedPoisson { s0, intensity } => Ok(poisson_hit_zero(
                *s0,
                *intensity,
                &record.jumps,
                grid.horizon(),
            )),
            QModel::ArithmeticBm { .. } | QModel::StochVolToy { .. } => {
                Ok(grid_first_passage(record, grid, bridge, rng, |_, s| s))
            }
            QModel::BoundedBubbleToy { .. } => Err(ModelError::Unsupported(
                "no path simulator for the bubble toy".into(),
            )),
        },
        StoppingRule::HitLine { alpha } => match model {
            QModel::ArithmeticBm { .. } => {
                let a = *alpha;
                Ok(grid_first_passage(record, grid, bridge, rng, |i, s| {
                    s - a * grid.time(i)
                }))
            }
            _ => Err(ModelError::Unsupported(format!(
                "hit_line stopping is only simulated for arithmetic_bm, got {}",
                model.name()
            ))),
        },
        StoppingRule::ExceedCap { cap } => {
            // Upward barrier, grid-monitored only.
            let k = *cap;
            for i in 0..grid.n_nodes() {
                if record.values[i] > k {
                    return Ok(StopTime::At(grid.time(i)));
                }
            }
            Ok(StopTime::Never)
        }
        StoppingRule::VolFloor { sigma_lo } => {
            if record.vol.is_empty() {
                return Err(ModelError::Unsupported(
                    "vol_floor requires a path with a volatility trajectory".into(),
                ));
            }
            for i in 0..grid.n_nodes() {
                if record.vol[i] <= *sigma_lo {
                    return Ok(StopTime::At(grid.time(i)));
                }
            }
            Ok(StopTime::Never)
        }
        StoppingRule::BracketLine { a, b } => {
            if record.vol.is_empty() {
                return Err(ModelError::Unsupported(
                    "bracket_line requires a path with a volatility trajectory".into(),
                ));
            }
            let dt = grid.dt();
            let mut qv = 0.0;
            for i in 0..grid.n_nodes() {
                let t = grid.time(i);
                if qv <= -a + b * t {
                    return Ok(StopTime::At(t));
                }
                if i < grid.n_steps() {
                    qv += record.vol[i] * record.vol[i] * dt;
                }
            }
            Ok(StopTime::Never)
        }
        StoppingRule::MinOf { first, second } => {
            let t1 = evaluate_stopping(record, model, first, grid, bridge, rng)?;
            let t2 = evaluate_stopping(record, model, second, grid, bridge, rng)?;
            Ok(t1.min(t2))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{path_rng, Lane};
    use alloc::vec;
    use alloc::vec::Vec;

    fn flat_record(values: Vec<f64>) -> PathRecord {
        PathRecord {
            values,
            vol: vec![],
            jumps: vec![],
            tau: StopTime::Never,
            weight: 1.0,
            rejected_steps: 0,
            substeps: 0,
        }
    }

    #[test]
    fn constant_path_never_stops() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let rec = flat_record(vec![1.0; 5]);
        let mut rng = path_rng(0, 0, Lane::Oracle);
        let tau = evaluate_stopping(
            &rec,
            &QModel::ArithmeticBm { s0: 1.0 },
            &StoppingRule::HitZero,
            &grid,
            BridgeMode::BrownianBridge,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tau, StopTime::Never);
    }

    #[test]
    fn poisson_drift_crossing_is_exact() {
        let grid = TimeGrid::uniform(2.0, 8).unwrap();
        let model = QModel::CompensatedPoisson {
            s0: 1.0,
            intensity: 1.0,
        };
        // No jump before t = 1: the drift takes S to zero at exactly 1.0.
        let mut rec = flat_record(vec![1.0; 9]);
        rec.jumps = vec![1.7];
        let mut rng = path_rng(0, 0, Lane::Oracle);
        let tau = evaluate_stopping(
            &rec,
            &model,
            &StoppingRule::HitZero,
            &grid,
            BridgeMode::None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tau, StopTime::At(1.0));

        // Jump at 0.4 lifts the path to 1.6; crossing at 0.4 + 1.6 = 2.0 = T.
        rec.jumps = vec![0.4];
        let tau = evaluate_stopping(
            &rec,
            &model,
            &StoppingRule::HitZero,
            &grid,
            BridgeMode::None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tau, StopTime::At(2.0));

        // Two early jumps push the crossing past the horizon.
        rec.jumps = vec![0.1, 0.2];
        let tau = evaluate_stopping(
            &rec,
            &model,
            &StoppingRule::HitZero,
            &grid,
            BridgeMode::None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tau, StopTime::Never);
    }

    #[test]
    fn node_hit_is_detected_without_bridge() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let rec = flat_record(vec![1.0, 0.5, -0.1, 0.5, 1.0]);
        let mut rng = path_rng(0, 0, Lane::Oracle);
        let tau = evaluate_stopping(
            &rec,
            &QModel::ArithmeticBm { s0: 1.0 },
            &StoppingRule::HitZero,
            &grid,
            BridgeMode::None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tau, StopTime::At(0.5));
    }

    #[test]
    fn bridge_flags_straddled_steps_at_known_rate() {
        // Distances 0.02 and 0.03 over dt = 0.01: crossing probability
        // exp(-0.12) ~ 0.8869.
        let grid = TimeGrid::uniform(0.01, 1).unwrap();
        let rec = flat_record(vec![0.02, 0.03]);
        let model = QModel::ArithmeticBm { s0: 0.02 };
        let n = 200_000u64;
        let mut hits = 0u64;
        for i in 0..n {
            let mut rng = path_rng(99, i, Lane::Oracle);
            let tau = evaluate_stopping(
                &rec,
                &model,
                &StoppingRule::HitZero,
                &grid,
                BridgeMode::BrownianBridge,
                &mut rng,
            )
            .unwrap();
            if !tau.is_never() {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / n as f64;
        let p = 0.886_920_436_717_157_5;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (p_hat - p).abs() < 4.0 * se,
            "p_hat = {p_hat}, expected {p} +- {se}"
        );
    }

    #[test]
    fn line_rule_triggers_on_boundary_contact() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        // Boundary alpha*t = t; path touches it at t = 0.5.
        let rec = flat_record(vec![1.0, 0.8, 0.5, 0.9, 1.2]);
        let mut rng = path_rng(0, 0, Lane::Oracle);
        let tau = evaluate_stopping(
            &rec,
            &QModel::ArithmeticBm { s0: 1.0 },
            &StoppingRule::HitLine { alpha: 1.0 },
            &grid,
            BridgeMode::None,
            &mut rng,
        )
        .unwrap();
        assert_eq!(tau, StopTime::At(0.5));
    }
}
