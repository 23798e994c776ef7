//! Compensated Poisson paths. Q-paths are event-driven (exact exponential
//! inter-arrivals) and then sampled onto the grid, so there is no
//! discretization error anywhere. Direct-P paths are generated by thinning
//! against the tilted intensity `lambda (s+1)/s`, whose integrated hazard
//! diverges at the boundary: the process jumps before it can reach zero.

use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Exp1, Poisson};

use crate::model::{path_rng, poisson_hit_zero, Lane, PathRecord, StopTime, TimeGrid, Validated};

use super::{attach_stopping, empty_record, PathExecutor, SimError};
use crate::stats::{self, McEstimate};

fn sample_onto_grid(rec: &mut PathRecord, grid: &TimeGrid, s0: f64, intensity: f64) {
    let mut k = 0usize;
    for i in 0..grid.n_nodes() {
        let t = grid.time(i);
        while k < rec.jumps.len() && rec.jumps[k] <= t {
            k += 1;
        }
        rec.values[i] = s0 + k as f64 - intensity * t;
    }
}

pub fn q_path(v: &Validated, s0: f64, intensity: f64, index: u64) -> Result<PathRecord, SimError> {
    let grid = &v.spec.grid;
    let horizon = grid.horizon();
    let mut rng = path_rng(v.spec.seed, index, Lane::QPath);
    let mut rec = empty_record(grid.n_nodes());
    let mut t = 0.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        t += e / intensity;
        if t > horizon {
            break;
        }
        rec.jumps.push(t);
    }
    rec.substeps = rec.jumps.len() as u64;
    sample_onto_grid(&mut rec, grid, s0, intensity);
    attach_stopping(v, rec, &mut rng)
}

const MAX_THINNING_ITERATIONS: u64 = 10_000_000;

pub fn p_path(v: &Validated, s0: f64, intensity: f64, index: u64) -> Result<PathRecord, SimError> {
    let grid = &v.spec.grid;
    let horizon = grid.horizon();
    let mut rng = path_rng(v.spec.seed, index, Lane::PPath);
    let mut rec = empty_record(grid.n_nodes());
    let mut t = 0.0;
    let mut s = s0;
    let mut iterations = 0u64;
    while t < horizon {
        iterations += 1;
        assert!(
            iterations < MAX_THINNING_ITERATIONS,
            "thinning failed to make progress (t = {t}, s = {s})"
        );
        // Window over which the state at most halves; the tilted intensity
        // is increasing along the decline, so its value at the window end
        // dominates the whole window.
        let h = (s / (2.0 * intensity)).min(horizon - t);
        if !(h > 0.0) {
            break;
        }
        let s_end = s - intensity * h;
        let majorant = intensity * (s_end + 1.0) / s_end;
        let mut tw = 0.0;
        let mut jumped = false;
        loop {
            let e: f64 = rng.sample(Exp1);
            tw += e / majorant;
            if tw > h {
                break;
            }
            let s_c = s - intensity * tw;
            let accept = (intensity * (s_c + 1.0) / s_c) / majorant;
            if rng.gen::<f64>() < accept {
                t += tw;
                s = s_c + 1.0;
                rec.jumps.push(t);
                jumped = true;
                break;
            }
        }
        if !jumped {
            t += h;
            s = s_end;
        }
    }
    rec.substeps = iterations;
    sample_onto_grid(&mut rec, grid, s0, intensity);
    rec.tau = StopTime::Never;
    debug_assert_eq!(
        poisson_hit_zero(s0, intensity, &rec.jumps, horizon),
        StopTime::Never
    );
    Ok(rec)
}

/// Default functionals evaluated exactly on the piecewise-linear
/// trajectory: mid-horizon value, terminal value, running maximum
/// (attained right after a jump or at the start), exact time integral, and
/// the jump count.
pub fn exact_statistics(
    rec: &PathRecord,
    grid: &TimeGrid,
    s0: f64,
    intensity: f64,
    out: &mut [f64],
) {
    let horizon = grid.horizon();
    let half = 0.5 * horizon;
    let mut k_half = 0usize;
    let mut mx = s0;
    let mut integral = 0.0;
    let mut t_prev = 0.0;
    let mut s_prev = s0;
    for (k, &tj) in rec.jumps.iter().enumerate() {
        if tj <= half {
            k_half = k + 1;
        }
        let seg = tj - t_prev;
        let s_before = s_prev - intensity * seg;
        integral += 0.5 * (s_prev + s_before) * seg;
        s_prev = s_before + 1.0;
        t_prev = tj;
        let peak = s0 + (k + 1) as f64 - intensity * tj;
        if peak > mx {
            mx = peak;
        }
    }
    let tail = horizon - t_prev;
    let s_term = s_prev - intensity * tail;
    integral += 0.5 * (s_prev + s_term) * tail;
    out[0] = s0 + k_half as f64 - intensity * half;
    out[1] = s_term;
    out[2] = mx;
    out[3] = integral;
    out[4] = rec.jumps.len() as f64;
}

/// Independent fine-grid implementation of `Q[tau > T]`, exact in law:
/// per-step jump counts are Poisson, jump offsets within a step are order
/// statistics of uniforms, and the linear decline between sub-events makes
/// the crossing test exact. Used to cross-check the event-driven estimate.
pub fn fine_grid_poisson_survival(
    v: &Validated,
    n_paths: u64,
    dt_sub: f64,
    exec: &dyn PathExecutor,
) -> Result<McEstimate, SimError> {
    let (s0, intensity) = match &v.spec.model {
        crate::model::QModel::CompensatedPoisson { s0, intensity } => (*s0, *intensity),
        _ => {
            return Err(SimError::Unsupported(
                "fine-grid survival applies to the compensated Poisson model".into(),
            ))
        }
    };
    let horizon = v.spec.grid.horizon();
    let m = libm::ceil(horizon / dt_sub) as u64;
    let dt = horizon / m as f64;
    let pois = Poisson::new(intensity * dt)
        .map_err(|_| SimError::Numerical("invalid Poisson step mean".into()))?;

    let rows = exec.map_rows(n_paths, 1, &|i, out| {
        let mut rng = path_rng(v.spec.seed, i, Lane::Oracle);
        let mut s = s0;
        let mut crossed = false;
        let mut offsets: Vec<f64> = Vec::new();
        'steps: for _ in 0..m {
            let k: f64 = rng.sample(pois);
            let k = k as usize;
            if k == 0 {
                if s <= intensity * dt {
                    crossed = true;
                    break;
                }
                s -= intensity * dt;
            } else {
                offsets.clear();
                for _ in 0..k {
                    offsets.push(rng.gen::<f64>() * dt);
                }
                offsets.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
                let mut prev = 0.0;
                for &off in offsets.iter() {
                    let gap = off - prev;
                    if s <= intensity * gap {
                        crossed = true;
                        break 'steps;
                    }
                    s += 1.0 - intensity * gap;
                    prev = off;
                }
                let tail = dt - prev;
                if s <= intensity * tail {
                    crossed = true;
                    break;
                }
                s -= intensity * tail;
            }
        }
        out[0] = if crossed { 0.0 } else { 1.0 };
    });
    let hits = stats::pairwise_sum(&rows) as u64;
    Ok(McEstimate::from_proportion(hits, n_paths))
}
