//! Domain types shared by every simulator: time grids, scenario
//! specifications, path records, the deterministic-randomness contract, and
//! first-passage evaluation on sampled paths.

mod grid;
mod path;
mod rng;
mod spec;
mod stopping;

pub use grid::TimeGrid;
pub use path::{MeasureTag, PathBundle, PathRecord, StopTime};
pub use rng::{path_rng, Lane, RngContract};
pub use spec::{validate_scenario, QModel, ScenarioSpec, Support, Validated, ValidationError};
pub use stopping::{evaluate_stopping, poisson_hit_zero, BridgeMode};

use alloc::string::String;
use core::fmt;

pub use spec::StoppingRule;

/// Errors from grid/bundle construction and stopping evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelError {
    Grid(String),
    Bundle(String),
    Unsupported(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Grid(m) => write!(f, "invalid time grid: {m}"),
            ModelError::Bundle(m) => write!(f, "invalid path bundle: {m}"),
            ModelError::Unsupported(m) => write!(f, "unsupported configuration: {m}"),
        }
    }
}

impl core::error::Error for ModelError {}
