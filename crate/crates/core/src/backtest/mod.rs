//! Walk-forward daily trading loop and the Markowitz baseline.
//!
//! Each day the forecaster sees prices up to and including that day, the
//! planner chooses three days of trades against the forecast path, and only
//! the first day's trade is committed against the realized next-day prices.

mod export;
mod forecasts;
mod markowitz;
mod plan;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{ArimaSpec, HORIZON};
use crate::market_data::{Asset, Market};
use crate::portfolio::{self, CommissionRates, DayReturns, PortfolioState, TradeDecision};
use crate::pso::{self, Bounds, PsoConfig};
use crate::risk::{Personality, RiskParams};

pub use export::{read_report_csv, read_summary_json, write_report_csv, write_summary_json, ReportSummary};
pub use forecasts::{ArimaForecaster, AssetForecast, MemoForecaster, PriceForecaster, WindowPolicy};
pub use markowitz::{markowitz_decision, MarkowitzContext};
pub use plan::{PlanContext, PlannedPath, PLAN_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Pso,
    Markowitz,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Pso => "pso",
            Strategy::Markowitz => "markowitz",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkowitzParams {
    /// Trailing days of returns for the covariance estimate.
    pub lookback: usize,
    /// Variance penalty.
    pub lambda: f64,
    pub grid_step: f64,
}

impl Default for MarkowitzParams {
    fn default() -> Self {
        Self {
            lookback: 60,
            lambda: 1.0,
            grid_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// First decision day.
    pub start_date: NaiveDate,
    /// Valuation day; the last decision is made the day before.
    pub end_date: NaiveDate,
    pub initial_cash: f64,
    pub rates: CommissionRates,
    pub risk: RiskParams,
    pub window: WindowPolicy,
    pub pso: PsoConfig,
    pub spec: ArimaSpec,
    pub markowitz: MarkowitzParams,
}

impl BacktestConfig {
    /// Defaults over the given date range.
    pub fn new(start_date: NaiveDate, end_date: NaiveDate) -> Self {
        Self {
            start_date,
            end_date,
            initial_cash: 1000.0,
            rates: CommissionRates::default(),
            risk: RiskParams::default(),
            window: WindowPolicy::default(),
            pso: PsoConfig::default(),
            spec: ArimaSpec::default(),
            markowitz: MarkowitzParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.start_date >= self.end_date {
            return Err(Error::InvalidArgument(format!(
                "start date {} must precede end date {}",
                self.start_date, self.end_date
            )));
        }
        if !(self.initial_cash > 0.0 && self.initial_cash.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "initial cash must be positive, got {}",
                self.initial_cash
            )));
        }
        let m = &self.markowitz;
        if m.lookback < 2 || !(m.lambda >= 0.0) || !(m.grid_step > 0.0 && m.grid_step <= 0.5) {
            return Err(Error::InvalidArgument(
                "markowitz needs lookback >= 2, lambda >= 0 and grid step in (0, 0.5]".into(),
            ));
        }
        let (WindowPolicy::Fixed(t) | WindowPolicy::Adaptive(t)) = self.window;
        if t < self.spec.min_sample() {
            return Err(Error::InvalidArgument(format!(
                "window {t} is below the minimum sample {}",
                self.spec.min_sample()
            )));
        }
        self.rates.validate()?;
        self.risk.validate()?;
        self.pso.validate()?;
        self.spec.validate()
    }

    pub fn arima_forecaster(&self) -> ArimaForecaster {
        ArimaForecaster {
            spec: self.spec,
            window: self.window,
        }
    }
}

/// One decision day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    /// State before the day's trade.
    pub state: PortfolioState,
    pub decision: TradeDecision,
    pub gold_forecast: [f64; HORIZON],
    pub btc_forecast: [f64; HORIZON],
    pub gold_sigma: f64,
    pub btc_sigma: f64,
    pub plan: [f64; PLAN_DIM],
    /// Planner score of `plan`.
    pub objective: f64,
    /// Value at the next day's close.
    pub value_next: f64,
    /// The forecaster or planner failed and the day was held.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub strategy: Strategy,
    pub personality: Personality,
    pub seed: u64,
    pub config: BacktestConfig,
    pub records: Vec<DailyRecord>,
    pub final_value: f64,
}

impl BacktestReport {
    pub fn decisions(&self) -> Vec<TradeDecision> {
        self.records.iter().map(|r| r.decision).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.records.iter().map(|r| r.state.value).collect();
        v.push(self.final_value);
        v
    }
}

/// Market index range `[start, end]` of a run, checked against the data.
pub fn day_range(market: &Market, config: &BacktestConfig) -> Result<(usize, usize)> {
    config.validate()?;
    let locate = |d: NaiveDate| {
        market.index_of(d).ok_or_else(|| {
            Error::Data(format!(
                "{d} is outside the data ({} .. {})",
                market.start(),
                market.start() + chrono::Days::new(market.len().saturating_sub(1) as u64)
            ))
        })
    };
    Ok((locate(config.start_date)?, locate(config.end_date)?))
}

/// Per-day swarm seed, so each day's search is independent of how many
/// days preceded it in the run.
pub fn day_seed(seed: u64, date: NaiveDate) -> u64 {
    let day = chrono::Datelike::num_days_from_ce(&date) as u64;
    seed ^ day.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct DayInputs {
    gold: Option<AssetForecast>,
    btc: Option<AssetForecast>,
}

impl DayInputs {
    fn both(&self) -> Option<(AssetForecast, AssetForecast)> {
        Some((self.gold?, self.btc?))
    }
}

fn forecasts_for(
    forecaster: &dyn PriceForecaster,
    gold: &[f64],
    btc: &[f64],
    i: usize,
    parallel: bool,
) -> DayInputs {
    let (g, b) = if parallel {
        rayon::join(
            || forecaster.forecast(Asset::Gold, &gold[..=i]),
            || forecaster.forecast(Asset::Bitcoin, &btc[..=i]),
        )
    } else {
        (
            forecaster.forecast(Asset::Gold, &gold[..=i]),
            forecaster.forecast(Asset::Bitcoin, &btc[..=i]),
        )
    };
    DayInputs {
        gold: g.ok(),
        btc: b.ok(),
    }
}

fn gold_open_ahead(market: &Market, i: usize) -> [bool; HORIZON] {
    std::array::from_fn(|k| market.calendar.gold_open_at(i + k))
}

fn plan_bounds(gold_open: &[bool; HORIZON]) -> Bounds {
    let mut lo = vec![-1.0; PLAN_DIM];
    let mut hi = vec![1.0; PLAN_DIM];
    for (k, open) in gold_open.iter().enumerate() {
        if !open {
            lo[2 * k] = 0.0;
            hi[2 * k] = 0.0;
        }
    }
    Bounds { lo, hi }
}

/// Runs the swarm strategy with ARIMA forecasts.
pub fn run(market: &Market, config: &BacktestConfig) -> Result<BacktestReport> {
    run_with(market, config, &config.arima_forecaster())
}

/// Runs the swarm strategy with the given forecast source.
pub fn run_with(market: &Market, config: &BacktestConfig, forecaster: &dyn PriceForecaster) -> Result<BacktestReport> {
    let (start, end) = day_range(market, config)?;
    let gold = market.gold.prices();
    let btc = market.btc.prices();
    let mut state = PortfolioState::cash(config.initial_cash);
    let mut records = Vec::with_capacity(end - start);
    let mut previous: Option<[f64; PLAN_DIM]> = None;

    for i in start..end {
        let date = market.gold.points()[i].date;
        let inputs = forecasts_for(forecaster, &gold, &btc, i, config.pso.parallel);
        let gold_open = gold_open_ahead(market, i);
        let planned = inputs.both().and_then(|(gf, bf)| {
            let ctx = PlanContext {
                state,
                gold_price: gold[i],
                btc_price: btc[i],
                gold_forecast: gf.points,
                btc_forecast: bf.points,
                gold_sigma: gf.sigma,
                btc_sigma: bf.sigma,
                gold_open,
                rates: config.rates,
                risk: config.risk,
            };
            let mut seeds = vec![vec![0.0; PLAN_DIM]];
            if let Some(p) = previous {
                seeds.insert(0, vec![p[2], p[3], p[4], p[5], 0.0, 0.0]);
            }
            let pso_config = PsoConfig {
                seed: day_seed(config.pso.seed, date),
                ..config.pso.clone()
            };
            let objective = |x: &[f64]| ctx.score(x);
            let out = pso::optimize(&objective, &ctx, &plan_bounds(&gold_open), &pso_config, &seeds).ok()?;
            if !out.best_score.is_finite() {
                return None;
            }
            let plan: [f64; PLAN_DIM] = out.best_position.try_into().ok()?;
            Some((plan, out.best_score))
        });

        let (plan, objective, fallback) = match planned {
            Some((plan, score)) => (plan, score, false),
            None => (hold_plan(&state, config, gold_open[0])?, f64::NAN, true),
        };
        let decision = TradeDecision::new(plan[0], plan[1]);
        previous = (!fallback).then_some(plan);
        let record = commit(market, config, i, state, decision, &inputs, plan, objective, fallback)?;
        state = portfolio::state_step(&state, decision, realized(&gold, &btc, i), &config.rates)?;
        records.push(record);
    }
    Ok(BacktestReport {
        strategy: Strategy::Pso,
        personality: config.risk.personality,
        seed: config.pso.seed,
        config: config.clone(),
        final_value: state.value,
        records,
    })
}

/// Runs the mean-variance baseline with ARIMA forecasts.
pub fn run_markowitz(market: &Market, config: &BacktestConfig) -> Result<BacktestReport> {
    run_markowitz_with(market, config, &config.arima_forecaster())
}

pub fn run_markowitz_with(
    market: &Market,
    config: &BacktestConfig,
    forecaster: &dyn PriceForecaster,
) -> Result<BacktestReport> {
    let (start, end) = day_range(market, config)?;
    let gold = market.gold.prices();
    let btc = market.btc.prices();
    let mut state = PortfolioState::cash(config.initial_cash);
    let mut records = Vec::with_capacity(end - start);

    for i in start..end {
        let inputs = forecasts_for(forecaster, &gold, &btc, i, config.pso.parallel);
        let gold_open = market.calendar.gold_open_at(i);
        let chosen = inputs.both().and_then(|(gf, bf)| {
            let lo = i.saturating_sub(config.markowitz.lookback);
            let ctx = MarkowitzContext {
                state,
                gold_history: &gold[lo..=i],
                btc_history: &btc[lo..=i],
                gold_forecast: gf.points,
                btc_forecast: bf.points,
                gold_open,
                rates: config.rates,
                delta: config.risk.delta,
                params: &config.markowitz,
            };
            markowitz_decision(&ctx).ok().flatten()
        });
        let (decision, objective, fallback) = match chosen {
            Some((d, score)) => (d, score, false),
            None => {
                let p = hold_plan(&state, config, gold_open)?;
                (TradeDecision::new(p[0], p[1]), f64::NAN, true)
            }
        };
        let mut plan = [0.0; PLAN_DIM];
        plan[0] = decision.x;
        plan[1] = decision.y;
        let record = commit(market, config, i, state, decision, &inputs, plan, objective, fallback)?;
        state = portfolio::state_step(&state, decision, realized(&gold, &btc, i), &config.rates)?;
        records.push(record);
    }
    Ok(BacktestReport {
        strategy: Strategy::Markowitz,
        personality: config.risk.personality,
        seed: config.pso.seed,
        config: config.clone(),
        final_value: state.value,
        records,
    })
}

fn realized(gold: &[f64], btc: &[f64], i: usize) -> DayReturns {
    DayReturns::from_prices(gold[i], gold[i + 1], btc[i], btc[i + 1])
}

/// The hold decision, repaired when the cash floor forces a sale.
fn hold_plan(state: &PortfolioState, config: &BacktestConfig, gold_open: bool) -> Result<[f64; PLAN_DIM]> {
    let d = portfolio::repair(state, TradeDecision::HOLD, &config.rates, gold_open, config.risk.delta)
        .ok_or_else(|| Error::Infeasible(format!("cash floor {} cannot be met", config.risk.delta)))?;
    let mut plan = [0.0; PLAN_DIM];
    plan[0] = d.x;
    plan[1] = d.y;
    Ok(plan)
}

#[allow(clippy::too_many_arguments)]
fn commit(
    market: &Market,
    config: &BacktestConfig,
    i: usize,
    state: PortfolioState,
    decision: TradeDecision,
    inputs: &DayInputs,
    plan: [f64; PLAN_DIM],
    objective: f64,
    fallback: bool,
) -> Result<DailyRecord> {
    let gold_open = market.calendar.gold_open_at(i);
    if !portfolio::feasible(&state, decision, &config.rates, gold_open, config.risk.delta) {
        return Err(Error::Infeasible(format!(
            "planner produced an infeasible trade {decision:?} on day {i}"
        )));
    }
    let gold = market.gold.points();
    let btc = market.btc.points();
    let r = DayReturns::from_prices(gold[i].price, gold[i + 1].price, btc[i].price, btc[i + 1].price);
    let nan = [f64::NAN; HORIZON];
    Ok(DailyRecord {
        date: gold[i].date,
        state,
        decision,
        gold_forecast: inputs.gold.map_or(nan, |f| f.points),
        btc_forecast: inputs.btc.map_or(nan, |f| f.points),
        gold_sigma: inputs.gold.map_or(f64::NAN, |f| f.sigma),
        btc_sigma: inputs.btc.map_or(f64::NAN, |f| f.sigma),
        plan,
        objective,
        value_next: portfolio::value_step(&state, decision, r, &config.rates)?,
        fallback,
    })
}

/// Outcome of replaying a fixed schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// States before each decision, then the final state.
    pub states: Vec<PortfolioState>,
    pub final_value: f64,
}

/// Replays `decisions` from `start` against realized prices, starting from
/// all cash. Fails on the first infeasible decision.
pub fn replay(
    market: &Market,
    start: NaiveDate,
    decisions: &[TradeDecision],
    initial_value: f64,
    rates: &CommissionRates,
    delta: f64,
) -> Result<Replay> {
    let i0 = market
        .index_of(start)
        .ok_or_else(|| Error::Data(format!("{start} is outside the data")))?;
    if i0 + decisions.len() >= market.len() {
        return Err(Error::InsufficientData {
            needed: i0 + decisions.len() + 1,
            available: market.len(),
        });
    }
    let gold = market.gold.prices();
    let btc = market.btc.prices();
    let mut state = PortfolioState::cash(initial_value);
    let mut states = Vec::with_capacity(decisions.len() + 1);
    for (k, d) in decisions.iter().enumerate() {
        let i = i0 + k;
        if !portfolio::feasible(&state, *d, rates, market.calendar.gold_open_at(i), delta) {
            return Err(Error::Infeasible(format!("decision {d:?} is infeasible on day {i}")));
        }
        states.push(state);
        state = portfolio::state_step(&state, *d, realized(&gold, &btc, i), rates)?;
    }
    states.push(state);
    Ok(Replay {
        final_value: state.value,
        states,
    })
}
