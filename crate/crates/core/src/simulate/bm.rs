//! Arithmetic Brownian paths: exact Gaussian increments under `Q`, and the
//! conditioned dynamics under `P` via Euler steps with the Girsanov drift
//! `delta/value`, adaptive stepping near the boundary, and
//! reject-and-resample on discretization crossings.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::float::sqrt;
use crate::kernels::SurvivalKernel;
use crate::model::{path_rng, Lane, PathRecord, Validated};

use super::{attach_stopping, empty_record, nan_free, SimError};

pub fn q_path(v: &Validated, s0: f64, index: u64) -> Result<PathRecord, SimError> {
    let grid = &v.spec.grid;
    let n = grid.n_steps();
    let sq_dt = sqrt(grid.dt());
    let mut rng = path_rng(v.spec.seed, index, Lane::QPath);
    let mut rec = empty_record(n + 1);
    rec.values[0] = s0;
    for i in 1..=n {
        let z: f64 = rng.sample(StandardNormal);
        rec.values[i] = rec.values[i - 1] + sq_dt * z;
    }
    rec.substeps = n as u64;
    // Bridge draws continue on the same per-path stream.
    attach_stopping(v, rec, &mut rng)
}

/// Fraction of the distance to the boundary a single drift step may cover
/// before the step is halved.
const DRIFT_STEP_FRACTION: f64 = 0.1;
/// Maximum adaptive halvings per base step.
const MAX_HALVINGS: u32 = 24;
/// Resample attempts before the path generator gives up loudly.
const MAX_RESAMPLES: u32 = 100_000;

struct PStepper<'a> {
    kernel: &'a SurvivalKernel,
    freeze_t: f64,
    rejected: u32,
    substeps: u64,
}

impl PStepper<'_> {
    fn drift(&self, t: f64, s: f64) -> f64 {
        let t_eff = if t > self.freeze_t { self.freeze_t } else { t };
        let value = self
            .kernel
            .value(t_eff, s)
            .expect("state inside the survival region");
        debug_assert!(value > 0.0);
        self.kernel
            .delta(t_eff, s)
            .expect("state inside the survival region")
            / value
    }

    /// Advances the state from `t` over `h`, splitting the step while the
    /// drift would cover more than a fixed fraction of the distance to the
    /// boundary, then sampling until the endpoint stays strictly above it.
    fn advance(&mut self, rng: &mut impl Rng, t: f64, s: f64, h: f64, depth: u32) -> f64 {
        let b = self.drift(t, s);
        let dist = s - self.kernel.boundary(t);
        if depth < MAX_HALVINGS && b * h > DRIFT_STEP_FRACTION * dist {
            let half = 0.5 * h;
            let mid = self.advance(rng, t, s, half, depth + 1);
            return self.advance(rng, t + half, mid, half, depth + 1);
        }
        self.substeps += 1;
        let sq_h = sqrt(h);
        let barrier = self.kernel.boundary(t + h);
        for _ in 0..MAX_RESAMPLES {
            let z: f64 = rng.sample(StandardNormal);
            let s_next = s + b * h + sq_h * z;
            if s_next > barrier {
                return s_next;
            }
            self.rejected += 1;
        }
        panic!(
            "direct-P simulation could not leave the boundary after {MAX_RESAMPLES} resamples \
             (t = {t}, s = {s}, h = {h})"
        );
    }
}

pub fn p_path(v: &Validated, s0: f64, index: u64) -> Result<PathRecord, SimError> {
    let grid = &v.spec.grid;
    let n = grid.n_steps();
    let dt = grid.dt();
    let kernel = SurvivalKernel::for_scenario(v)?;
    let mut stepper = PStepper {
        kernel: &kernel,
        // The drift has a 1/sqrt(T - t) singularity at maturity; its time
        // argument is frozen over the last base step.
        freeze_t: grid.horizon() - dt,
        rejected: 0,
        substeps: 0,
    };
    let mut rng = path_rng(v.spec.seed, index, Lane::PPath);
    let mut rec = empty_record(n + 1);
    rec.values[0] = s0;
    for i in 0..n {
        rec.values[i + 1] = stepper.advance(&mut rng, grid.time(i), rec.values[i], dt, 0);
    }
    debug_assert!(nan_free(&rec.values));
    rec.rejected_steps = stepper.rejected;
    rec.substeps = stepper.substeps;
    // The construction keeps every node strictly above the boundary, so the
    // stopping rule never triggers; record the surely-alive flag directly.
    debug_assert!((0..=n).all(|i| rec.values[i] > kernel.boundary(grid.time(i))));
    Ok(rec)
}
