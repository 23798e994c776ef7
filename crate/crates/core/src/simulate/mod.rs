//! Path generation under the base measure `Q`, under the conditioned
//! measure `P` directly (tilted dynamics), and under `Q` with terminal
//! `M_T` weighting, plus the cross-validation between the two `P`
//! representations.

mod bm;
mod poisson;
mod stochvol;

pub use poisson::fine_grid_poisson_survival;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::kernels::{DensityProcess, KernelError, SurvivalKernel};
use crate::model::{
    evaluate_stopping, BridgeMode, Lane, MeasureTag, ModelError, PathBundle, PathRecord, QModel,
    StopTime, StoppingRule, Support, TimeGrid, Validated,
};
use crate::stats::{self, McEstimate};

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Model(ModelError),
    Kernel(KernelError),
    Unsupported(String),
    Numerical(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Model(e) => write!(f, "{e}"),
            SimError::Kernel(e) => write!(f, "{e}"),
            SimError::Unsupported(m) => write!(f, "unsupported: {m}"),
            SimError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Model(e)
    }
}

impl From<KernelError> for SimError {
    fn from(e: KernelError) -> Self {
        SimError::Kernel(e)
    }
}

/// Executes a per-path job for indices `0..n` and returns the rows in
/// index order as one flat `n * width` buffer.
///
/// Implementations may parallelize freely: the job is pure per index, so
/// the buffer contents are independent of scheduling. Aggregations over the
/// buffer use deterministic pairwise reduction.
pub trait PathExecutor: Sync {
    fn map_rows(&self, n: u64, width: usize, job: &(dyn Fn(u64, &mut [f64]) + Sync)) -> Vec<f64>;
}

/// Single-threaded reference executor.
pub struct SerialExec;

impl PathExecutor for SerialExec {
    fn map_rows(&self, n: u64, width: usize, job: &(dyn Fn(u64, &mut [f64]) + Sync)) -> Vec<f64> {
        let mut rows = vec![0.0; (n as usize) * width];
        for i in 0..n {
            let start = i as usize * width;
            job(i, &mut rows[start..start + width]);
        }
        rows
    }
}

/// Extracts column `c` from a flat row buffer.
pub fn column(rows: &[f64], width: usize, c: usize) -> Vec<f64> {
    rows.chunks_exact(width).map(|r| r[c]).collect()
}

fn measure_supported(v: &Validated, measure: MeasureTag) -> Result<(), SimError> {
    let ok = match (v.support, measure) {
        (Support::Full, _) => true,
        (Support::QSideAndBound, MeasureTag::Q) => true,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(SimError::Unsupported(format!(
            "scenario '{}' ({}, {}) has no {:?} simulator",
            v.spec.label,
            v.spec.model.name(),
            v.spec.stopping.name(),
            measure
        )))
    }
}

/// Simulates path `index` of the scenario under the requested measure
/// representation. Pure in `(scenario, measure, index)`: bit-identical
/// results regardless of execution order or thread count.
pub fn simulate_path(
    v: &Validated,
    measure: MeasureTag,
    index: u64,
) -> Result<PathRecord, SimError> {
    measure_supported(v, measure)?;
    let spec = &v.spec;
    match (&spec.model, measure) {
        (QModel::ArithmeticBm { s0 }, MeasureTag::Q) => bm::q_path(v, *s0, index),
        (QModel::ArithmeticBm { s0 }, MeasureTag::P) => bm::p_path(v, *s0, index),
        (QModel::ArithmeticBm { s0 }, MeasureTag::QWeighted) => {
            let mut rec = bm::q_path(v, *s0, index)?;
            let density = DensityProcess::for_scenario(v)?;
            rec.weight = density.terminal_weight(&rec, &spec.grid)?;
            Ok(rec)
        }
        (QModel::CompensatedPoisson { s0, intensity }, MeasureTag::Q) => {
            poisson::q_path(v, *s0, *intensity, index)
        }
        (QModel::CompensatedPoisson { s0, intensity }, MeasureTag::P) => {
            poisson::p_path(v, *s0, *intensity, index)
        }
        (QModel::CompensatedPoisson { s0, intensity }, MeasureTag::QWeighted) => {
            let mut rec = poisson::q_path(v, *s0, *intensity, index)?;
            let density = DensityProcess::for_scenario(v)?;
            rec.weight = density.terminal_weight(&rec, &spec.grid)?;
            Ok(rec)
        }
        (
            QModel::StochVolToy {
                s0,
                vol0,
                vol_of_vol,
            },
            MeasureTag::Q,
        ) => stochvol::q_path(v, *s0, *vol0, *vol_of_vol, index),
        _ => Err(SimError::Unsupported(format!(
            "no simulator for model {} under {:?}",
            spec.model.name(),
            measure
        ))),
    }
}

/// Simulates `n_paths` paths serially and collects them into a bundle
/// (enforcing the bundle invariants). `n_paths = 0` yields an empty bundle.
pub fn simulate_bundle(
    v: &Validated,
    measure: MeasureTag,
    n_paths: u64,
) -> Result<PathBundle, SimError> {
    measure_supported(v, measure)?;
    let mut records = Vec::with_capacity(n_paths as usize);
    let mut rejected = 0u64;
    let mut substeps = 0u64;
    for i in 0..n_paths {
        let rec = simulate_path(v, measure, i)?;
        rejected += rec.rejected_steps as u64;
        substeps += rec.substeps;
        records.push(rec);
    }
    if measure == MeasureTag::P {
        guard_rejection_rate(v.spec.grid.dt(), rejected, substeps)?;
    }
    Ok(PathBundle::new(v.spec.grid, measure, records)?)
}

/// Boundary-crossing rejections are an artifact of Euler discretization; at
/// fine steps they must be vanishingly rare or the run is unreliable.
pub fn guard_rejection_rate(dt: f64, rejected: u64, substeps: u64) -> Result<(), SimError> {
    if dt <= 1.0001e-4 && substeps > 0 {
        let rate = rejected as f64 / substeps as f64;
        if rate > 1e-3 {
            return Err(SimError::Numerical(format!(
                "rejected-step rate {rate:.2e} exceeds 0.1% at dt = {dt:.2e}; \
                 the discretization cannot be trusted"
            )));
        }
    }
    Ok(())
}

pub(crate) fn attach_stopping(
    v: &Validated,
    mut rec: PathRecord,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Result<PathRecord, SimError> {
    let tau = evaluate_stopping(
        &rec,
        &v.spec.model,
        &v.spec.stopping,
        &v.spec.grid,
        BridgeMode::BrownianBridge,
        rng,
    )?;
    rec.tau = tau;
    Ok(rec)
}

// ---------------------------------------------------------------------------
// Default path functionals and cross-validation
// ---------------------------------------------------------------------------

/// Names of the default statistics compared between the two `P`
/// representations. Poisson scenarios add the terminal jump count.
pub fn default_statistic_names(model: &QModel) -> Vec<&'static str> {
    match model {
        QModel::CompensatedPoisson { .. } => {
            vec!["s_half", "s_terminal", "s_max", "s_integral", "n_jumps"]
        }
        _ => vec!["s_half", "s_terminal", "s_max", "s_integral"],
    }
}

/// Default functionals of one path. Diffusion paths use grid evaluation
/// (mid node, terminal node, node max, trapezoid integral); Poisson paths
/// evaluate the piecewise-linear trajectory exactly from the jump times.
/// Both `P` representations of a scenario use the same definition, so the
/// comparison is apples to apples.
pub fn default_statistics(rec: &PathRecord, grid: &TimeGrid, model: &QModel, out: &mut [f64]) {
    match model {
        QModel::CompensatedPoisson { s0, intensity } => {
            poisson::exact_statistics(rec, grid, *s0, *intensity, out)
        }
        _ => {
            let n = grid.n_steps();
            let dt = grid.dt();
            let vs = &rec.values;
            out[0] = vs[n / 2];
            out[1] = vs[n];
            let mut mx = vs[0];
            for &x in vs.iter() {
                if x > mx {
                    mx = x;
                }
            }
            out[2] = mx;
            let mut integral = 0.0;
            for i in 0..n {
                integral += 0.5 * (vs[i] + vs[i + 1]) * dt;
            }
            out[3] = integral;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValRow {
    pub statistic: String,
    pub direct: f64,
    pub direct_se: f64,
    pub weighted: f64,
    pub weighted_se: f64,
    /// `(direct - weighted) / sqrt(se_d^2 + se_w^2)`; `None` when both
    /// variances are degenerate.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub scenario: String,
    pub n_paths: u64,
    pub rows: Vec<CrossValRow>,
    pub mean_weight: McEstimate,
    pub rejected_fraction: f64,
}

impl CrossValReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.z)
            .fold(0.0, |a, z| a.max(z.abs()))
    }
}

/// Compares direct-`P` and `M_T`-weighted-`Q` estimates of the default
/// statistics. The two representations sample the same measure, so every
/// `|z|` should be small; a systematic excess indicates a bias in one of
/// the simulators.
pub fn cross_validate(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<CrossValReport, SimError> {
    measure_supported(v, MeasureTag::P)?;
    let names = default_statistic_names(&v.spec.model);
    let k = names.len();
    let grid = v.spec.grid;
    let model = v.spec.model.clone();

    // Direct rows: [stats.., rejected, substeps]
    let width_d = k + 2;
    let direct = exec.map_rows(n_paths, width_d, &|i, out| {
        let rec = simulate_path(v, MeasureTag::P, i).expect("validated scenario");
        default_statistics(&rec, &grid, &model, &mut out[..k]);
        out[k] = rec.rejected_steps as f64;
        out[k + 1] = rec.substeps as f64;
    });

    // Weighted rows: [w*stats.., w]
    let width_w = k + 1;
    let weighted = exec.map_rows(n_paths, width_w, &|i, out| {
        let rec = simulate_path(v, MeasureTag::QWeighted, i).expect("validated scenario");
        default_statistics(&rec, &grid, &model, &mut out[..k]);
        for x in out[..k].iter_mut() {
            *x *= rec.weight;
        }
        out[k] = rec.weight;
    });

    let rejected = stats::pairwise_sum(&column(&direct, width_d, k));
    let substeps = stats::pairwise_sum(&column(&direct, width_d, k + 1));
    guard_rejection_rate(grid.dt(), rejected as u64, substeps as u64)?;

    let mut rows = Vec::with_capacity(k);
    for (c, name) in names.iter().enumerate() {
        let d = McEstimate::from_samples(&column(&direct, width_d, c));
        let w = McEstimate::from_samples(&column(&weighted, width_w, c));
        let z = d.z_against(w.value, w.se);
        rows.push(CrossValRow {
            statistic: name.to_string(),
            direct: d.value,
            direct_se: d.se,
            weighted: w.value,
            weighted_se: w.se,
            z,
        });
    }

    Ok(CrossValReport {
        scenario: v.spec.label.clone(),
        n_paths,
        rows,
        mean_weight: McEstimate::from_samples(&column(&weighted, width_w, k)),
        rejected_fraction: if substeps > 0.0 { rejected / substeps } else { 0.0 },
    })
}

// ---------------------------------------------------------------------------
// Scalar Monte-Carlo estimators
// ---------------------------------------------------------------------------

/// Empirical `Q[sigma > T]` from bridge-corrected Q-paths.
pub fn estimate_survival(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<McEstimate, SimError> {
    measure_supported(v, MeasureTag::Q)?;
    let horizon = v.spec.grid.horizon();
    let rows = exec.map_rows(n_paths, 1, &|i, out| {
        let rec = simulate_path(v, MeasureTag::Q, i).expect("validated scenario");
        out[0] = if rec.tau.occurred_by(horizon) { 0.0 } else { 1.0 };
    });
    let hits = stats::pairwise_sum(&rows) as u64;
    Ok(McEstimate::from_proportion(hits, n_paths))
}

/// Mean of the terminal density `M_T` over Q-paths; equals 1 in
/// expectation for every scenario with a density process.
pub fn mean_terminal_weight(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<McEstimate, SimError> {
    measure_supported(v, MeasureTag::Q)?;
    // Fail fast if the scenario has no density process.
    DensityProcess::for_scenario(v)?;
    let rows = exec.map_rows(n_paths, 1, &|i, out| {
        let rec = simulate_path(v, MeasureTag::QWeighted, i).expect("validated scenario");
        out[0] = rec.weight;
    });
    Ok(McEstimate::from_samples(&rows))
}

/// Joint estimate of `Q[sigma_1 <= T, sigma_2 > T]` and `Q[sigma <= T]` for
/// a composite stopping rule; used to back the incomplete-market bound
/// assumptions by Monte Carlo.
pub fn estimate_joint_stop(
    v: &Validated,
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<(McEstimate, McEstimate), SimError> {
    measure_supported(v, MeasureTag::Q)?;
    let (first, second) = match &v.spec.stopping {
        StoppingRule::MinOf { first, second } => (first.clone(), second.clone()),
        _ => {
            return Err(SimError::Unsupported(
                "joint stop estimation needs a composite stopping rule".into(),
            ))
        }
    };
    let grid = v.spec.grid;
    let horizon = grid.horizon();
    let model = v.spec.model.clone();
    let rows = exec.map_rows(n_paths, 2, &|i, out| {
        let rec = simulate_path(v, MeasureTag::Q, i).expect("validated scenario");
        // Re-evaluate the two legs separately with a dedicated stream.
        let mut rng = crate::model::path_rng(v.spec.seed, i, Lane::Oracle);
        let t1 = evaluate_stopping(&rec, &model, &first, &grid, BridgeMode::BrownianBridge, &mut rng)
            .expect("validated scenario");
        let t2 = evaluate_stopping(&rec, &model, &second, &grid, BridgeMode::BrownianBridge, &mut rng)
            .expect("validated scenario");
        let (zero_leg, other_leg) = if matches!(*first, StoppingRule::HitZero) {
            (t1, t2)
        } else {
            (t2, t1)
        };
        out[0] = if zero_leg.occurred_by(horizon) && !other_leg.occurred_by(horizon) {
            1.0
        } else {
            0.0
        };
        out[1] = if rec.tau.occurred_by(horizon) { 1.0 } else { 0.0 };
    });
    let joint = stats::pairwise_sum(&column(&rows, 2, 0)) as u64;
    let any = stats::pairwise_sum(&column(&rows, 2, 1)) as u64;
    Ok((
        McEstimate::from_proportion(joint, n_paths),
        McEstimate::from_proportion(any, n_paths),
    ))
}

/// Kernel for the survival claim of a validated Brownian scenario.
pub fn scenario_kernel(v: &Validated) -> Result<SurvivalKernel, SimError> {
    Ok(SurvivalKernel::for_scenario(v)?)
}

/// True when every path of a P-bundle survives strictly past the horizon.
pub fn all_paths_survive(bundle: &PathBundle) -> bool {
    bundle
        .records
        .iter()
        .all(|r| !r.tau.occurred_by(bundle.grid.horizon()))
}

pub(crate) fn nan_free(values: &[f64]) -> bool {
    values.iter().all(|x| x.is_finite())
}

pub(crate) fn empty_record(n_nodes: usize) -> PathRecord {
    PathRecord {
        values: vec![0.0; n_nodes],
        vol: Vec::new(),
        jumps: Vec::new(),
        tau: StopTime::Never,
        weight: 1.0,
        rejected_steps: 0,
        substeps: 0,
    }
}
