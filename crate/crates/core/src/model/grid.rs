use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Uniform monitoring grid on `[0, T]`.
///
/// Node times are derived as `T * i / n_steps`, so the first node is exactly
/// 0, the last is exactly `T`, and the sequence is strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self, ModelError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(ModelError::Grid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(ModelError::Grid("n_steps must be at least 1".into()));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Time of node `i`; `time(0) == 0` and `time(n_steps) == horizon`
    /// exactly.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.horizon * (i as f64 / self.n_steps as f64)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.time(i)).collect()
    }

    /// Same horizon, different resolution.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self, ModelError> {
        TimeGrid::uniform(self.horizon, n_steps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let g = TimeGrid::uniform(0.7, 333).unwrap();
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(333), 0.7);
        let times = g.times();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(TimeGrid::uniform(0.0, 10).is_err());
        assert!(TimeGrid::uniform(-1.0, 10).is_err());
        assert!(TimeGrid::uniform(f64::NAN, 10).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
    }
}
