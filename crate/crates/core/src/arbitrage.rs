//! Trading strategies, self-financing wealth ledgers with proportional
//! costs, and the optimal arbitrage profit `U(T) = 1/SP`.
//!
//! Wealth is tracked as `V_t = x0 + gains_t - costs_t` with separate gain
//! and cost accumulators, so two runs that differ only in the cost rate
//! have pathwise identical gains: cost monotonicity and "profits reduced by
//! exactly the logged cost" hold bit-for-bit, not just approximately.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::float::{abs, sqrt};
use crate::kernels::SurvivalKernel;
use crate::model::{MeasureTag, PathBundle, PathRecord, QModel, StoppingRule, TimeGrid, Validated};
use crate::simulate::{self, PathExecutor, SimError};
use crate::stats;

#[derive(Debug, Clone, PartialEq)]
pub enum ArbitrageError {
    Incompatible(String),
    Domain(String),
    Sim(String),
}

impl fmt::Display for ArbitrageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArbitrageError::Incompatible(m) => write!(f, "incompatible configuration: {m}"),
            ArbitrageError::Domain(m) => write!(f, "domain error: {m}"),
            ArbitrageError::Sim(m) => write!(f, "simulation error: {m}"),
        }
    }
}

impl core::error::Error for ArbitrageError {}

impl From<SimError> for ArbitrageError {
    fn from(e: SimError) -> Self {
        ArbitrageError::Sim(format!("{e}"))
    }
}

/// A self-financing trading rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Hold nothing; wealth stays at `x0`.
    DoNothing,
    /// Replicating delta hedge of the survival claim, scaled by `scale`
    /// units of the claim. Position is zero after the stop and over the
    /// terminal freeze step; the unit hedge is capped at `1/sqrt(dt)`
    /// against the digital gamma blow-up near maturity.
    DeltaHedge {
        kernel: SurvivalKernel,
        scale: f64,
    },
    /// Buy one unit and hold. If `alpha * T > s0`, buys at time zero and
    /// holds to `T`; otherwise buys at the first time the price reaches
    /// `alpha * T / 2` before `T/2` (does nothing if it never does).
    BuyHoldLine { alpha: f64 },
    /// If no jump happened on `[0, epsilon]`, buy one unit at `epsilon` and
    /// sell at the first jump (at the horizon if no jump arrives).
    BuyHoldPoisson { epsilon: f64 },
}

impl Strategy {
    pub fn delta_hedge(v: &Validated) -> Result<Strategy, ArbitrageError> {
        Self::delta_hedge_scaled(v, 1.0)
    }

    pub fn delta_hedge_scaled(v: &Validated, scale: f64) -> Result<Strategy, ArbitrageError> {
        let kernel = SurvivalKernel::for_scenario(v)
            .map_err(|e| ArbitrageError::Incompatible(format!("{e}")))?;
        Ok(Strategy::DeltaHedge { kernel, scale })
    }

    pub fn buy_hold_line(v: &Validated) -> Result<Strategy, ArbitrageError> {
        match (&v.spec.model, &v.spec.stopping) {
            (QModel::ArithmeticBm { .. }, StoppingRule::HitLine { alpha }) => {
                Ok(Strategy::BuyHoldLine { alpha: *alpha })
            }
            _ => Err(ArbitrageError::Incompatible(
                "buy-and-hold line strategy needs the Brownian line scenario".into(),
            )),
        }
    }

    pub fn buy_hold_poisson(v: &Validated, epsilon: f64) -> Result<Strategy, ArbitrageError> {
        match &v.spec.model {
            QModel::CompensatedPoisson { s0, intensity } => {
                if !(epsilon > 0.0) || epsilon >= s0 / intensity || epsilon >= v.spec.grid.horizon()
                {
                    return Err(ArbitrageError::Domain(format!(
                        "wait time must satisfy 0 < epsilon < min(s0/intensity, T), got {epsilon}"
                    )));
                }
                Ok(Strategy::BuyHoldPoisson { epsilon })
            }
            _ => Err(ArbitrageError::Incompatible(
                "buy-and-hold Poisson strategy needs the compensated Poisson scenario".into(),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::DoNothing => "do_nothing",
            Strategy::DeltaHedge { .. } => "delta_hedge",
            Strategy::BuyHoldLine { .. } => "buy_hold_line",
            Strategy::BuyHoldPoisson { .. } => "buy_hold_poisson",
        }
    }

    fn check_model(&self, model: &QModel) -> Result<(), ArbitrageError> {
        let ok = match self {
            Strategy::DoNothing => true,
            Strategy::DeltaHedge { .. } | Strategy::BuyHoldLine { .. } => {
                matches!(model, QModel::ArithmeticBm { .. })
            }
            Strategy::BuyHoldPoisson { .. } => {
                matches!(model, QModel::CompensatedPoisson { .. })
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ArbitrageError::Incompatible(format!(
                "strategy {} cannot run on model {}",
                self.name(),
                model.name()
            )))
        }
    }
}

/// Per-path outcome of a strategy run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSummary {
    pub v_terminal: f64,
    pub min_wealth: f64,
    pub gains: f64,
    pub costs: f64,
    pub trades: u32,
    pub traded: bool,
    pub max_traded_price: f64,
    pub cap_activations: u32,
}

impl LedgerSummary {
    pub fn profit(&self, x0: f64) -> f64 {
        self.v_terminal - x0
    }
}

/// One executed trade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub time: f64,
    pub delta_position: f64,
    pub price: f64,
    pub cost: f64,
}

/// Full wealth trace of one path, for diagnostics and identity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthLedger {
    pub initial_x: f64,
    pub cost_rate: f64,
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    pub positions: Vec<f64>,
    pub trades: Vec<TradeEvent>,
}

struct GridRun<'a> {
    grid: &'a TimeGrid,
    record: &'a PathRecord,
    x0: f64,
    kappa: f64,
    trace: Option<&'a mut WealthLedger>,
}

impl GridRun<'_> {
    fn run(mut self, mut position: impl FnMut(usize, &PathRecord) -> f64) -> LedgerSummary {
        let n = self.grid.n_steps();
        let values = &self.record.values;
        let mut pos_prev = 0.0;
        let mut gains = 0.0;
        let mut costs = 0.0;
        let mut trades = 0u32;
        let mut traded = false;
        let mut max_price = 0.0;
        let mut min_wealth = f64::INFINITY;
        for i in 0..=n {
            let s = values[i];
            // Forced liquidation at the horizon.
            let target = if i == n { 0.0 } else { position(i, self.record) };
            let dpos = target - pos_prev;
            if dpos != 0.0 {
                let cost = self.kappa * abs(dpos) * s;
                costs += cost;
                trades += 1;
                traded = true;
                if s > max_price {
                    max_price = s;
                }
                if let Some(trace) = self.trace.as_deref_mut() {
                    trace.trades.push(TradeEvent {
                        time: self.grid.time(i),
                        delta_position: dpos,
                        price: s,
                        cost,
                    });
                }
            }
            let wealth = self.x0 + gains - costs;
            if wealth < min_wealth {
                min_wealth = wealth;
            }
            if let Some(trace) = self.trace.as_deref_mut() {
                trace.times.push(self.grid.time(i));
                trace.wealth.push(wealth);
                trace.positions.push(target);
            }
            if i < n {
                gains += target * (values[i + 1] - s);
            }
            pos_prev = target;
        }
        LedgerSummary {
            v_terminal: self.x0 + gains - costs,
            min_wealth,
            gains,
            costs,
            trades,
            traded,
            max_traded_price: max_price,
            cap_activations: 0,
        }
    }
}

/// Runs one strategy over one path and returns the ledger summary.
pub fn run_ledger(
    strategy: &Strategy,
    model: &QModel,
    grid: &TimeGrid,
    record: &PathRecord,
    x0: f64,
    kappa: f64,
) -> Result<LedgerSummary, ArbitrageError> {
    strategy.check_model(model)?;
    run_ledger_inner(strategy, model, grid, record, x0, kappa, None)
}

/// Like [`run_ledger`] but also fills a full wealth trace.
pub fn wealth_ledger(
    strategy: &Strategy,
    model: &QModel,
    grid: &TimeGrid,
    record: &PathRecord,
    x0: f64,
    kappa: f64,
) -> Result<(LedgerSummary, WealthLedger), ArbitrageError> {
    strategy.check_model(model)?;
    let mut trace = WealthLedger {
        initial_x: x0,
        cost_rate: kappa,
        times: Vec::new(),
        wealth: Vec::new(),
        positions: Vec::new(),
        trades: Vec::new(),
    };
    let summary = run_ledger_inner(strategy, model, grid, record, x0, kappa, Some(&mut trace))?;
    Ok((summary, trace))
}

fn run_ledger_inner(
    strategy: &Strategy,
    model: &QModel,
    grid: &TimeGrid,
    record: &PathRecord,
    x0: f64,
    kappa: f64,
    trace: Option<&mut WealthLedger>,
) -> Result<LedgerSummary, ArbitrageError> {
    match strategy {
        Strategy::DoNothing => Ok(GridRun {
            grid,
            record,
            x0,
            kappa,
            trace,
        }
        .run(|_, _| 0.0)),
        Strategy::DeltaHedge { kernel, scale } => {
            let cap = 1.0 / sqrt(grid.dt());
            let n = grid.n_steps();
            let cap_hits = core::cell::Cell::new(0u32);
            let scale = *scale;
            let kernel = *kernel;
            let mut summary = GridRun {
                grid,
                record,
                x0,
                kappa,
                trace,
            }
            .run(|i, rec| {
                let t = grid.time(i);
                if i + 1 >= n || rec.tau.occurred_by(t) {
                    return 0.0;
                }
                let d = kernel.delta(t, rec.values[i]).unwrap_or(0.0);
                let h = if d > cap {
                    cap_hits.set(cap_hits.get() + 1);
                    cap
                } else {
                    d
                };
                scale * h
            });
            summary.cap_activations = cap_hits.get();
            Ok(summary)
        }
        Strategy::BuyHoldLine { alpha } => {
            let horizon = grid.horizon();
            let s0 = record.values[0];
            let n = grid.n_steps();
            if alpha * horizon > s0 {
                Ok(GridRun {
                    grid,
                    record,
                    x0,
                    kappa,
                    trace,
                }
                .run(move |i, _| if i < n { 1.0 } else { 0.0 }))
            } else {
                let level = alpha * horizon / 2.0;
                let deadline = horizon / 2.0;
                let mut holding = false;
                Ok(GridRun {
                    grid,
                    record,
                    x0,
                    kappa,
                    trace,
                }
                .run(move |i, rec| {
                    if !holding && grid.time(i) <= deadline && rec.values[i] <= level {
                        holding = true;
                    }
                    if holding && i < n {
                        1.0
                    } else {
                        0.0
                    }
                }))
            }
        }
        Strategy::BuyHoldPoisson { epsilon } => {
            let (s0, intensity) = match model {
                QModel::CompensatedPoisson { s0, intensity } => (*s0, *intensity),
                _ => unreachable!("checked by check_model"),
            };
            Ok(poisson_event_ledger(
                grid, record, x0, kappa, *epsilon, s0, intensity, trace,
            ))
        }
    }
}

/// Event-timeline ledger for the Poisson buy-and-hold: trades happen at the
/// exact wait time and the exact first jump time, so the arithmetic is free
/// of grid error.
#[allow(clippy::too_many_arguments)]
fn poisson_event_ledger(
    grid: &TimeGrid,
    record: &PathRecord,
    x0: f64,
    kappa: f64,
    epsilon: f64,
    s0: f64,
    intensity: f64,
    trace: Option<&mut WealthLedger>,
) -> LedgerSummary {
    let horizon = grid.horizon();
    let first_jump = record.jumps.first().copied();
    let trading = match first_jump {
        Some(j) => j > epsilon,
        None => true,
    };
    if !trading {
        if let Some(tr) = trace {
            tr.times = alloc::vec![0.0, horizon];
            tr.wealth = alloc::vec![x0, x0];
            tr.positions = alloc::vec![0.0, 0.0];
        }
        return LedgerSummary {
            v_terminal: x0,
            min_wealth: x0,
            gains: 0.0,
            costs: 0.0,
            trades: 0,
            traded: false,
            max_traded_price: 0.0,
            cap_activations: 0,
        };
    }

    let buy_price = s0 - intensity * epsilon;
    let (sell_time, trough, sell_price) = match first_jump {
        // S declines to s0 - intensity*j just before the jump, then +1.
        Some(j) => (j, s0 - intensity * j, s0 - intensity * j + 1.0),
        // No jump at all by the horizon: forced liquidation at T.
        None => (
            horizon,
            s0 - intensity * horizon,
            s0 - intensity * horizon,
        ),
    };
    let buy_cost = kappa * buy_price;
    let sell_cost = kappa * abs(sell_price);
    let gains = sell_price - buy_price;
    let costs = buy_cost + sell_cost;
    let wealth_trough = x0 + (trough - buy_price) - buy_cost;
    let v_terminal = x0 + gains - costs;
    let min_wealth = x0.min(wealth_trough).min(v_terminal);

    if let Some(tr) = trace {
        tr.times = alloc::vec![0.0, epsilon, sell_time, horizon];
        tr.wealth = alloc::vec![x0, x0 - buy_cost, v_terminal, v_terminal];
        tr.positions = alloc::vec![0.0, 1.0, 0.0, 0.0];
        tr.trades.push(TradeEvent {
            time: epsilon,
            delta_position: 1.0,
            price: buy_price,
            cost: buy_cost,
        });
        tr.trades.push(TradeEvent {
            time: sell_time,
            delta_position: -1.0,
            price: sell_price,
            cost: sell_cost,
        });
    }

    LedgerSummary {
        v_terminal,
        min_wealth,
        gains,
        costs,
        trades: 2,
        traded: true,
        max_traded_price: buy_price.max(sell_price),
        cap_activations: 0,
    }
}

/// Aggregated statistics of a strategy over a path set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub scenario_hash: String,
    pub strategy: String,
    pub x0: f64,
    pub kappa: f64,
    pub n_paths: u64,
    pub vt_min: f64,
    pub vt_mean: f64,
    pub vt_q01: f64,
    pub fraction_below_1: f64,
    pub trades_mean: f64,
    pub cost_total_mean: f64,
    /// Paths whose wealth went strictly negative at some node.
    pub admissibility_violations: u64,
    /// Smallest wealth seen at any node of any path.
    pub min_wealth: f64,
    pub cap_activations: u64,
    /// Fraction of paths on which the strategy traded at all.
    pub trading_fraction: f64,
    /// Worst profit among trading paths.
    pub trading_min_profit: Option<f64>,
    pub trading_mean_profit: Option<f64>,
    /// Largest price at which any trade was executed.
    pub max_traded_price: f64,
}

pub(crate) fn aggregate_summaries(
    scenario_hash: u64,
    strategy: &Strategy,
    x0: f64,
    kappa: f64,
    summaries: &[LedgerSummary],
) -> StrategyReport {
    let n = summaries.len();
    let mut vts: Vec<f64> = summaries.iter().map(|s| s.v_terminal).collect();
    let vt_mean = stats::mean(&vts);
    stats::sort_in_place(&mut vts);
    let trading: Vec<&LedgerSummary> = summaries.iter().filter(|s| s.traded).collect();
    let trading_profits: Vec<f64> = trading.iter().map(|s| s.profit(x0)).collect();
    let costs: Vec<f64> = summaries.iter().map(|s| s.costs).collect();
    let trades: Vec<f64> = summaries.iter().map(|s| s.trades as f64).collect();
    StrategyReport {
        scenario_hash: format!("{scenario_hash:016x}"),
        strategy: strategy.name().to_string(),
        x0,
        kappa,
        n_paths: n as u64,
        vt_min: vts.first().copied().unwrap_or(f64::NAN),
        vt_mean,
        vt_q01: stats::quantile(&vts, 0.01),
        fraction_below_1: vts.iter().filter(|&&v| v < 1.0).count() as f64 / n.max(1) as f64,
        trades_mean: stats::mean(&trades),
        cost_total_mean: stats::mean(&costs),
        admissibility_violations: summaries.iter().filter(|s| s.min_wealth < 0.0).count() as u64,
        min_wealth: summaries
            .iter()
            .map(|s| s.min_wealth)
            .fold(f64::INFINITY, f64::min),
        cap_activations: summaries.iter().map(|s| s.cap_activations as u64).sum(),
        trading_fraction: trading.len() as f64 / n.max(1) as f64,
        trading_min_profit: trading_profits
            .iter()
            .copied()
            .fold(None, |acc: Option<f64>, p| {
                Some(acc.map_or(p, |a| a.min(p)))
            }),
        trading_mean_profit: if trading_profits.is_empty() {
            None
        } else {
            Some(stats::mean(&trading_profits))
        },
        max_traded_price: summaries
            .iter()
            .map(|s| s.max_traded_price)
            .fold(0.0, f64::max),
    }
}

/// Runs a strategy over every path of a bundle.
pub fn run_strategy(
    v: &Validated,
    strategy: &Strategy,
    bundle: &PathBundle,
    x0: f64,
    kappa: f64,
) -> Result<StrategyReport, ArbitrageError> {
    if bundle.grid != v.spec.grid {
        return Err(ArbitrageError::Incompatible(
            "bundle grid does not match the scenario grid".into(),
        ));
    }
    let mut summaries = Vec::with_capacity(bundle.n_paths());
    for rec in &bundle.records {
        summaries.push(run_ledger(
            strategy,
            &v.spec.model,
            &v.spec.grid,
            rec,
            x0,
            kappa,
        )?);
    }
    Ok(aggregate_summaries(
        v.spec.stable_hash(),
        strategy,
        x0,
        kappa,
        &summaries,
    ))
}

/// Streaming variant: simulates `n_paths` paths under `measure` and feeds
/// them through the ledger without materializing a bundle.
pub fn run_strategy_mc(
    v: &Validated,
    strategy: &Strategy,
    measure: MeasureTag,
    n_paths: u64,
    x0: f64,
    kappa: f64,
    exec: &dyn PathExecutor,
) -> Result<StrategyReport, ArbitrageError> {
    strategy.check_model(&v.spec.model)?;
    let grid = v.spec.grid;
    let model = v.spec.model.clone();
    const W: usize = 10;
    let rows = exec.map_rows(n_paths, W, &|i, out| {
        let rec = simulate::simulate_path(v, measure, i).expect("validated scenario");
        let s = run_ledger(strategy, &model, &grid, &rec, x0, kappa)
            .expect("strategy checked against the model");
        out[0] = s.v_terminal;
        out[1] = s.min_wealth;
        out[2] = s.gains;
        out[3] = s.costs;
        out[4] = s.trades as f64;
        out[5] = if s.traded { 1.0 } else { 0.0 };
        out[6] = s.max_traded_price;
        out[7] = s.cap_activations as f64;
        out[8] = rec.rejected_steps as f64;
        out[9] = rec.substeps as f64;
    });
    if measure == MeasureTag::P {
        let rejected = stats::pairwise_sum(&simulate::column(&rows, W, 8)) as u64;
        let substeps = stats::pairwise_sum(&simulate::column(&rows, W, 9)) as u64;
        simulate::guard_rejection_rate(grid.dt(), rejected, substeps)?;
    }
    let summaries: Vec<LedgerSummary> = rows
        .chunks_exact(W)
        .map(|r| LedgerSummary {
            v_terminal: r[0],
            min_wealth: r[1],
            gains: r[2],
            costs: r[3],
            trades: r[4] as u32,
            traded: r[5] != 0.0,
            max_traded_price: r[6],
            cap_activations: r[7] as u32,
        })
        .collect();
    Ok(aggregate_summaries(
        v.spec.stable_hash(),
        strategy,
        x0,
        kappa,
        &summaries,
    ))
}

/// Optimal arbitrage profit implied by a superhedging price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalArbitrage {
    pub superhedge_price: f64,
    /// `1 / superhedge_price`, the largest constant reachable surely from
    /// unit initial wealth.
    pub profit: f64,
    /// True iff the superhedging price is strictly below 1. When it equals
    /// 1 there is no optimal arbitrage, though arbitrages may still exist.
    pub exists: bool,
}

pub fn optimal_arbitrage_profit(superhedge_price: f64) -> Result<OptimalArbitrage, ArbitrageError> {
    if !(superhedge_price > 0.0 && superhedge_price <= 1.0) {
        return Err(ArbitrageError::Domain(format!(
            "superhedging price must lie in (0, 1], got {superhedge_price}"
        )));
    }
    Ok(OptimalArbitrage {
        superhedge_price,
        profit: 1.0 / superhedge_price,
        exists: superhedge_price < 1.0,
    })
}

/// Buy-and-hold line arbitrage on a direct-P bundle.
pub fn obvious_arbitrage_line(
    v: &Validated,
    bundle: &PathBundle,
    x0: f64,
    kappa: f64,
) -> Result<StrategyReport, ArbitrageError> {
    if bundle.measure != MeasureTag::P {
        return Err(ArbitrageError::Incompatible(
            "the obvious line arbitrage is evaluated on a direct-P bundle".into(),
        ));
    }
    let strategy = Strategy::buy_hold_line(v)?;
    run_strategy(v, &strategy, bundle, x0, kappa)
}

/// Wait-then-buy-and-hold Poisson arbitrage on a direct-P bundle.
pub fn obvious_arbitrage_poisson(
    v: &Validated,
    epsilon: f64,
    bundle: &PathBundle,
    x0: f64,
    kappa: f64,
) -> Result<StrategyReport, ArbitrageError> {
    if bundle.measure != MeasureTag::P {
        return Err(ArbitrageError::Incompatible(
            "the obvious Poisson arbitrage is evaluated on a direct-P bundle".into(),
        ));
    }
    let strategy = Strategy::buy_hold_poisson(v, epsilon)?;
    run_strategy(v, &strategy, bundle, x0, kappa)
}

/// Pathwise tracking error of the unit delta hedge against the survival
/// value, measured at nodes where the path is still alive and outside the
/// terminal freeze step. Starts from `x0 = Q[sigma > T]` with zero costs.
pub fn hedge_tracking_error(
    v: &Validated,
    kernel: &SurvivalKernel,
    record: &PathRecord,
) -> Result<f64, ArbitrageError> {
    let grid = &v.spec.grid;
    let n = grid.n_steps();
    let dt = grid.dt();
    let freeze = grid.horizon() - dt;
    let x0 = kernel
        .value(0.0, record.values[0])
        .map_err(|e| ArbitrageError::Sim(format!("{e}")))?;
    let cap = 1.0 / sqrt(dt);
    let mut gains = 0.0;
    let mut pos = 0.0;
    let mut err = 0.0f64;
    for i in 0..=n {
        let t = grid.time(i);
        let alive = !record.tau.occurred_by(t);
        if alive && t <= freeze && i < n {
            let target = kernel
                .value(t, record.values[i])
                .map_err(|e| ArbitrageError::Sim(format!("{e}")))?;
            let e = abs((x0 + gains) - target);
            if e > err {
                err = e;
            }
        }
        pos = if i + 1 >= n || !alive {
            0.0
        } else {
            kernel
                .delta(t, record.values[i])
                .unwrap_or(0.0)
                .min(cap)
        };
        if i < n {
            gains += pos * (record.values[i + 1] - record.values[i]);
        }
    }
    Ok(err)
}

/// Mean pathwise replication error of the delta hedge on Q-paths for each
/// step count, plus the fitted exponent of the error against `dt`. A
/// well-behaved discrete hedge converges like `sqrt(dt)`, so the exponent
/// should sit near one half.
pub fn replication_refinement(
    v: &Validated,
    step_counts: &[usize],
    n_paths: u64,
    exec: &dyn PathExecutor,
) -> Result<(Vec<(f64, f64)>, f64), ArbitrageError> {
    let kernel = SurvivalKernel::for_scenario(v)
        .map_err(|e| ArbitrageError::Incompatible(format!("{e}")))?;
    let mut points = Vec::with_capacity(step_counts.len());
    for &steps in step_counts {
        let mut spec = v.spec.clone();
        spec.grid = spec
            .grid
            .with_steps(steps)
            .map_err(|e| ArbitrageError::Sim(format!("{e}")))?;
        let refined = crate::model::validate_scenario(spec)
            .map_err(|e| ArbitrageError::Sim(format!("{e}")))?;
        let rows = exec.map_rows(n_paths, 1, &|i, out| {
            let rec = simulate::simulate_path(&refined, MeasureTag::Q, i)
                .expect("validated scenario");
            out[0] = hedge_tracking_error(&refined, &kernel, &rec)
                .expect("kernel matches scenario");
        });
        points.push((refined.spec.grid.dt(), stats::mean(&rows)));
    }
    let lx: Vec<f64> = points.iter().map(|p| crate::float::ln(p.0)).collect();
    let ly: Vec<f64> = points.iter().map(|p| crate::float::ln(p.1)).collect();
    let exponent = stats::linreg_slope(&lx, &ly);
    Ok((points, exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_scenario, ScenarioSpec, StopTime};
    use alloc::vec;

    fn bm_scenario(n_steps: usize) -> Validated {
        validate_scenario(ScenarioSpec {
            label: "bm".into(),
            model: QModel::ArithmeticBm { s0: 1.0 },
            stopping: StoppingRule::HitZero,
            grid: TimeGrid::uniform(1.0, n_steps).unwrap(),
            seed: 11,
        })
        .unwrap()
    }

    #[test]
    fn zero_strategy_keeps_wealth_constant() {
        let v = bm_scenario(8);
        let rec = simulate::simulate_path(&v, MeasureTag::Q, 0).unwrap();
        let s = run_ledger(
            &Strategy::DoNothing,
            &v.spec.model,
            &v.spec.grid,
            &rec,
            1.0,
            0.01,
        )
        .unwrap();
        assert_eq!(s.v_terminal, 1.0);
        assert_eq!(s.trades, 0);
        assert!(!s.traded);
    }

    #[test]
    fn power_of_two_scaling_is_bitwise_exact() {
        let v = bm_scenario(64);
        let h1 = Strategy::delta_hedge(&v).unwrap();
        let h2 = Strategy::delta_hedge_scaled(&v, 2.0).unwrap();
        for i in 0..16 {
            let rec = simulate::simulate_path(&v, MeasureTag::Q, i).unwrap();
            let a = run_ledger(&h1, &v.spec.model, &v.spec.grid, &rec, 0.5, 0.0).unwrap();
            let b = run_ledger(&h2, &v.spec.model, &v.spec.grid, &rec, 1.0, 0.0).unwrap();
            assert_eq!(b.v_terminal, 2.0 * a.v_terminal);
            assert_eq!(b.gains, 2.0 * a.gains);
        }
    }

    #[test]
    fn general_scaling_is_exact_to_rounding() {
        let v = bm_scenario(64);
        let c = 1.7;
        let h1 = Strategy::delta_hedge(&v).unwrap();
        let hc = Strategy::delta_hedge_scaled(&v, c).unwrap();
        for i in 0..8 {
            let rec = simulate::simulate_path(&v, MeasureTag::Q, i).unwrap();
            let a = run_ledger(&h1, &v.spec.model, &v.spec.grid, &rec, 1.0, 0.0).unwrap();
            let b = run_ledger(&hc, &v.spec.model, &v.spec.grid, &rec, c, 0.0).unwrap();
            assert!((b.v_terminal - c * a.v_terminal).abs() < 1e-12);
        }
    }

    #[test]
    fn self_financing_identity_holds_on_traces() {
        let v = bm_scenario(32);
        let strat = Strategy::delta_hedge(&v).unwrap();
        for i in 0..8 {
            let rec = simulate::simulate_path(&v, MeasureTag::Q, i).unwrap();
            let (summary, trace) =
                wealth_ledger(&strat, &v.spec.model, &v.spec.grid, &rec, 0.7, 1e-3).unwrap();
            // V_T - x0 - sum(position * dS) + sum(costs) = 0
            let mut acc = 0.0;
            for j in 0..trace.positions.len() - 1 {
                acc += trace.positions[j] * (rec.values[j + 1] - rec.values[j]);
            }
            let total_cost: f64 = trace.trades.iter().map(|t| t.cost).sum();
            let resid = summary.v_terminal - trace.initial_x - acc + total_cost;
            assert!(resid.abs() < 1e-10, "residual {resid}");
        }
    }

    #[test]
    fn costs_subtract_exactly() {
        let v = bm_scenario(64);
        let strat = Strategy::delta_hedge(&v).unwrap();
        for i in 0..8 {
            let rec = simulate::simulate_path(&v, MeasureTag::Q, i).unwrap();
            let free = run_ledger(&strat, &v.spec.model, &v.spec.grid, &rec, 0.7, 0.0).unwrap();
            let paid = run_ledger(&strat, &v.spec.model, &v.spec.grid, &rec, 0.7, 1e-3).unwrap();
            assert_eq!(free.gains, paid.gains);
            assert_eq!(free.v_terminal - paid.v_terminal, paid.costs);
        }
    }

    #[test]
    fn reciprocal_is_stored_bit_exactly() {
        let u = optimal_arbitrage_profit(0.682_689_492_137_085_9).unwrap();
        assert_eq!(u.profit.to_bits(), (1.0 / 0.682_689_492_137_085_9f64).to_bits());
        assert!(u.exists);
        assert!((u.profit * u.superhedge_price - 1.0).abs() <= f64::EPSILON);

        let flat = optimal_arbitrage_profit(1.0).unwrap();
        assert_eq!(flat.profit, 1.0);
        assert!(!flat.exists);

        assert!(optimal_arbitrage_profit(0.0).is_err());
        assert!(optimal_arbitrage_profit(1.5).is_err());
        assert!(optimal_arbitrage_profit(-0.2).is_err());
    }

    #[test]
    fn poisson_buy_hold_ledger_is_exact() {
        let v = validate_scenario(ScenarioSpec {
            label: "poisson".into(),
            model: QModel::CompensatedPoisson {
                s0: 1.0,
                intensity: 1.0,
            },
            stopping: StoppingRule::HitZero,
            grid: TimeGrid::uniform(2.0, 8).unwrap(),
            seed: 3,
        })
        .unwrap();
        let strat = Strategy::buy_hold_poisson(&v, 0.1).unwrap();
        // First jump at 0.6 > 0.1: buy at 0.9, sell at 1.4 + 1 = ... S just
        // before the jump is 1 - 0.6 = 0.4, so sell at 1.4.
        let mut rec = simulate::simulate_path(&v, MeasureTag::Q, 0).unwrap();
        rec.jumps = vec![0.6, 1.9];
        rec.tau = StopTime::Never;
        let s = run_ledger(&strat, &v.spec.model, &v.spec.grid, &rec, 1.0, 0.0).unwrap();
        assert!((s.v_terminal - (1.0 + (1.4 - 0.9))).abs() < 1e-15);
        assert_eq!(s.trades, 2);
        // Trough: wealth just before the jump = 1 + (0.4 - 0.9).
        assert!((s.min_wealth - 0.5).abs() < 1e-15);

        // Early jump: no trade.
        rec.jumps = vec![0.05];
        let s = run_ledger(&strat, &v.spec.model, &v.spec.grid, &rec, 1.0, 0.0).unwrap();
        assert_eq!(s.v_terminal, 1.0);
        assert!(!s.traded);
    }

    #[test]
    fn strategy_model_mismatch_is_rejected() {
        let v = bm_scenario(8);
        let rec = simulate::simulate_path(&v, MeasureTag::Q, 0).unwrap();
        let strat = Strategy::BuyHoldPoisson { epsilon: 0.1 };
        assert!(run_ledger(&strat, &v.spec.model, &v.spec.grid, &rec, 1.0, 0.0).is_err());
    }
}
