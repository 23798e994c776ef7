//! Q-side simulation of the stochastic-volatility toy: the spot volatility
//! is an exact lognormal geometric Brownian motion (independent of the
//! asset driver), the asset is Euler-integrated, and first passage to zero
//! uses the bridge correction with the per-step volatility.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::float::{exp, sqrt};
use crate::model::{path_rng, Lane, PathRecord, Validated};

use super::{attach_stopping, empty_record, SimError};

pub fn q_path(
    v: &Validated,
    s0: f64,
    vol0: f64,
    vol_of_vol: f64,
    index: u64,
) -> Result<PathRecord, SimError> {
    let grid = &v.spec.grid;
    let n = grid.n_steps();
    let dt = grid.dt();
    let sq_dt = sqrt(dt);
    let mut rng = path_rng(v.spec.seed, index, Lane::QPath);
    let mut rec = empty_record(n + 1);
    rec.vol = alloc::vec![0.0; n + 1];
    rec.values[0] = s0;
    rec.vol[0] = vol0;
    let drift = -0.5 * vol_of_vol * vol_of_vol * dt;
    for i in 0..n {
        // Asset increment first, then the volatility update (fixed draw
        // order keeps streams reproducible).
        let zs: f64 = rng.sample(StandardNormal);
        let zv: f64 = rng.sample(StandardNormal);
        rec.values[i + 1] = rec.values[i] + rec.vol[i] * sq_dt * zs;
        rec.vol[i + 1] = rec.vol[i] * exp(drift + vol_of_vol * sq_dt * zv);
    }
    rec.substeps = n as u64;
    attach_stopping(v, rec, &mut rng)
}
