//! Small numerical statistics toolkit: deterministic pairwise reduction,
//! Monte-Carlo estimates with standard errors, quantiles, and a least
//! squares slope for refinement regressions.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::float::sqrt;

/// Pairwise (tree) summation. Deterministic for a given slice regardless of
/// how the slice was produced, and more accurate than a running sum.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let devs: Vec<f64> = xs.iter().map(|&x| (x - m) * (x - m)).collect();
    pairwise_sum(&devs) / (n - 1) as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sqrt(variance(xs) / xs.len() as f64)
}

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        McEstimate {
            value: mean(xs),
            se: standard_error(xs),
            n: xs.len() as u64,
        }
    }

    /// Estimate of a probability from a hit count.
    pub fn from_proportion(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        McEstimate {
            value: p,
            se: sqrt(p * (1.0 - p) / n as f64),
            n,
        }
    }

    /// |estimate - reference| measured in combined standard errors.
    pub fn z_against(&self, reference: f64, reference_se: f64) -> Option<f64> {
        let combined = sqrt(self.se * self.se + reference_se * reference_se);
        if combined == 0.0 {
            if self.value == reference {
                return Some(0.0);
            }
            return None;
        }
        Some((self.value - reference) / combined)
    }
}

/// Empirical lower quantile via the order statistic at
/// `floor(q * (n - 1))`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (q * (sorted.len() - 1) as f64) as usize;
    sorted[idx.min(sorted.len() - 1)]
}

pub fn sort_in_place(xs: &mut [f64]) {
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("no NaN in samples"));
}

/// Least-squares slope of `ys` against `xs`.
pub fn linreg_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn pairwise_matches_naive_on_small_inputs() {
        let xs = vec![0.1, 0.2, 0.3, 0.4];
        assert!((pairwise_sum(&xs) - 1.0).abs() < 1e-15);
        assert!((mean(&xs) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn proportion_se() {
        let e = McEstimate::from_proportion(50, 100);
        assert_eq!(e.value, 0.5);
        assert!((e.se - 0.05).abs() < 1e-12);
    }

    #[test]
    fn quantile_uses_floor_order_statistic() {
        let xs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.01), 1.0);
    }

    #[test]
    fn slope_recovers_line() {
        let xs = vec![1.0, 2.0, 3.0];
        let ys = vec![2.0, 4.0, 6.0];
        assert!((linreg_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
