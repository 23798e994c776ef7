use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{ModelError, TimeGrid};

/// First-passage time of a path, with an explicit "never on [0, T]" flag
/// instead of a large-number sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopTime {
    At(f64),
    Never,
}

impl StopTime {
    #[inline]
    pub fn is_never(&self) -> bool {
        matches!(self, StopTime::Never)
    }

    /// True if the stop happened at or before `t`.
    #[inline]
    pub fn occurred_by(&self, t: f64) -> bool {
        match self {
            StopTime::At(u) => *u <= t,
            StopTime::Never => false,
        }
    }

    #[inline]
    pub fn value(&self) -> Option<f64> {
        match self {
            StopTime::At(u) => Some(*u),
            StopTime::Never => None,
        }
    }

    /// Minimum of two stopping times (`Never` is the identity).
    pub fn min(self, other: StopTime) -> StopTime {
        match (self, other) {
            (StopTime::Never, o) => o,
            (s, StopTime::Never) => s,
            (StopTime::At(a), StopTime::At(b)) => StopTime::At(if a <= b { a } else { b }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureTag {
    Q,
    P,
    QWeighted,
}

/// One simulated path: asset values on the grid nodes plus per-path
/// metadata.
///
/// `vol` carries the spot-volatility trajectory for the stochastic-vol toy
/// (empty otherwise); `jumps` carries exact jump times for event-driven
/// Poisson paths (empty otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub values: Vec<f64>,
    pub vol: Vec<f64>,
    pub jumps: Vec<f64>,
    pub tau: StopTime,
    pub weight: f64,
    /// Euler steps rejected and resampled because they crossed the boundary
    /// (direct-P diffusion simulation only).
    pub rejected_steps: u32,
    /// Total Euler substeps taken, including adaptive refinements.
    pub substeps: u64,
}

impl PathRecord {
    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("path has at least one node")
    }
}

/// A set of simulated paths on a common grid under one measure
/// representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub measure: MeasureTag,
    pub records: Vec<PathRecord>,
}

impl PathBundle {
    /// Builds a bundle and enforces the per-measure invariants:
    /// all paths share the initial value and node count; `Q` and `P` paths
    /// are unweighted; `P` paths must survive the whole horizon; weighted
    /// paths that stopped carry zero weight.
    pub fn new(
        grid: TimeGrid,
        measure: MeasureTag,
        records: Vec<PathRecord>,
    ) -> Result<Self, ModelError> {
        let n_nodes = grid.n_nodes();
        let horizon = grid.horizon();
        let s0 = records.first().map(|r| r.values[0]);
        for (i, r) in records.iter().enumerate() {
            if r.values.len() != n_nodes {
                return Err(ModelError::Bundle(format!(
                    "path {i} has {} nodes, grid has {n_nodes}",
                    r.values.len()
                )));
            }
            if Some(r.values[0]) != s0 {
                return Err(ModelError::Bundle(format!(
                    "path {i} starts at {} instead of {:?}",
                    r.values[0], s0
                )));
            }
            match measure {
                MeasureTag::Q => {
                    if r.weight != 1.0 {
                        return Err(ModelError::Bundle(format!(
                            "Q path {i} has weight {} != 1",
                            r.weight
                        )));
                    }
                }
                MeasureTag::P => {
                    if r.weight != 1.0 {
                        return Err(ModelError::Bundle(format!(
                            "P path {i} has weight {} != 1",
                            r.weight
                        )));
                    }
                    if r.tau.occurred_by(horizon) {
                        return Err(ModelError::Bundle(format!(
                            "P path {i} stopped at {:?} <= horizon",
                            r.tau
                        )));
                    }
                }
                MeasureTag::QWeighted => {
                    if !(r.weight >= 0.0) {
                        return Err(ModelError::Bundle(format!(
                            "weighted path {i} has negative weight {}",
                            r.weight
                        )));
                    }
                    if r.tau.occurred_by(horizon) && r.weight != 0.0 {
                        return Err(ModelError::Bundle(format!(
                            "stopped weighted path {i} has weight {} != 0",
                            r.weight
                        )));
                    }
                }
            }
        }
        Ok(PathBundle {
            grid,
            measure,
            records,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.records.len()
    }

    pub fn initial_value(&self) -> Option<f64> {
        self.records.first().map(|r| r.values[0])
    }

    /// Fraction of paths with `tau > T`.
    pub fn survival_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let horizon = self.grid.horizon();
        let alive = self
            .records
            .iter()
            .filter(|r| !r.tau.occurred_by(horizon))
            .count();
        alive as f64 / self.records.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(values: Vec<f64>, tau: StopTime, weight: f64) -> PathRecord {
        PathRecord {
            values,
            vol: vec![],
            jumps: vec![],
            tau,
            weight,
            rejected_steps: 0,
            substeps: 0,
        }
    }

    #[test]
    fn p_bundle_rejects_stopped_paths() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let bad = vec![record(vec![1.0, 0.5, 0.2], StopTime::At(0.5), 1.0)];
        assert!(PathBundle::new(grid, MeasureTag::P, bad).is_err());
        let ok = vec![record(vec![1.0, 1.5, 1.2], StopTime::Never, 1.0)];
        assert!(PathBundle::new(grid, MeasureTag::P, ok).is_ok());
    }

    #[test]
    fn weighted_bundle_requires_zero_weight_when_stopped() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let bad = vec![record(vec![1.0, -0.1, 0.2], StopTime::At(0.5), 0.7)];
        assert!(PathBundle::new(grid, MeasureTag::QWeighted, bad).is_err());
        let ok = vec![record(vec![1.0, -0.1, 0.2], StopTime::At(0.5), 0.0)];
        assert!(PathBundle::new(grid, MeasureTag::QWeighted, ok).is_ok());
    }

    #[test]
    fn stop_time_ordering() {
        assert_eq!(
            StopTime::At(0.3).min(StopTime::At(0.7)),
            StopTime::At(0.3)
        );
        assert_eq!(StopTime::Never.min(StopTime::At(0.7)), StopTime::At(0.7));
        assert!(StopTime::At(1.0).occurred_by(1.0));
        assert!(!StopTime::At(1.0 + 1e-12).occurred_by(1.0));
        assert!(!StopTime::Never.occurred_by(f64::MAX));
    }
}
