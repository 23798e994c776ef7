//! Engine for market models that admit optimal arbitrage via a
//! non-equivalent change of measure.
//!
//! The crate builds a conditioned measure `P` from a no-arbitrage base
//! measure `Q` by tilting with the density process
//! `M_t = Q[sigma > T | F_t] / Q[sigma > T]`, where `sigma` is a stopping
//! time the agent bets will not occur before the horizon. Under `P` the
//! stopping event is impossible, the superhedging price of the constant 1
//! drops below 1, and its reciprocal is the optimal arbitrage profit.
//!
//! Everything here is `no_std` (with `alloc`): pure kernels, per-path
//! simulation, strategy ledgers, and report types. The companion `arbforge`
//! crate adds file formats, caching, the CLI, and a parallel path executor.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arbitrage;
pub(crate) mod float;
pub mod fragility;
pub mod kernels;
pub mod model;
pub mod simulate;
pub mod special;
pub mod stats;
pub mod superhedge;

pub use model::{
    evaluate_stopping, validate_scenario, BridgeMode, MeasureTag, PathBundle, PathRecord,
    QModel, RngContract, ScenarioSpec, StopTime, StoppingRule, Support, TimeGrid, Validated,
    ValidationError,
};
pub use simulate::{
    simulate_bundle, simulate_path, PathExecutor, SerialExec, SimError,
};
