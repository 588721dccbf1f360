//! Robustness harnesses: random perturbation of an optimized trade schedule,
//! and one-at-a-time reruns with the initial capital or a commission rate
//! nudged.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{self, BacktestConfig, BacktestReport, PlanContext, PriceForecaster, Strategy, PLAN_DIM};
use crate::error::{Error, Result};
use crate::market_data::Market;
use crate::portfolio::{self, DayReturns, PortfolioState, TradeDecision};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Range of the relative perturbation size.
    pub rel_lo: f64,
    pub rel_hi: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            rel_lo: 0.01,
            rel_hi: 0.03,
            trials: 50,
            seed: 0,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.rel_lo && self.rel_lo <= self.rel_hi && self.rel_hi < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "perturbation range must satisfy 0 <= lo <= hi < 1, got [{}, {}]",
                self.rel_lo, self.rel_hi
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    /// Value at the end of the replayed perturbed schedule; NaN if aborted.
    pub final_value: f64,
    /// Mean daily planner score of the perturbed decisions.
    pub objective: f64,
    /// The perturbed schedule could not be replayed.
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationOutcome {
    pub baseline_final_value: f64,
    pub baseline_objective: f64,
    pub trials: Vec<TrialResult>,
}

impl PerturbationOutcome {
    /// Share of completed trials whose objective beats the baseline.
    pub fn beat_fraction(&self) -> f64 {
        let done: Vec<_> = self.trials.iter().filter(|t| !t.aborted).collect();
        if done.is_empty() {
            return 0.0;
        }
        done.iter().filter(|t| t.objective > self.baseline_objective).count() as f64 / done.len() as f64
    }
}

fn check_alignment(report: &BacktestReport, market: &Market) -> Result<usize> {
    let Some(first) = report.records.first() else {
        return Err(Error::InvalidArgument("report has no decision days".into()));
    };
    let i0 = market
        .index_of(first.date)
        .ok_or_else(|| Error::Data(format!("report starts on {} which is outside the data", first.date)))?;
    if i0 + report.records.len() >= market.len() {
        return Err(Error::Data("report runs past the end of the data".into()));
    }
    Ok(i0)
}

/// Planner score of trading `first` on record `k`'s day, keeping the rest of
/// that day's plan. `None` on days held for lack of a forecast.
fn day_score(report: &BacktestReport, market: &Market, i: usize, k: usize, first: TradeDecision) -> Option<f64> {
    let r = &report.records[k];
    if r.fallback || r.gold_forecast.iter().chain(&r.btc_forecast).any(|v| !v.is_finite()) {
        return None;
    }
    let config = &report.config;
    let ctx = PlanContext {
        state: r.state,
        gold_price: market.gold.points()[i].price,
        btc_price: market.btc.points()[i].price,
        gold_forecast: r.gold_forecast,
        btc_forecast: r.btc_forecast,
        gold_sigma: r.gold_sigma,
        btc_sigma: r.btc_sigma,
        gold_open: std::array::from_fn(|j| market.calendar.gold_open_at(i + j)),
        rates: config.rates,
        risk: config.risk,
    };
    let mut plan: [f64; PLAN_DIM] = r.plan;
    plan[0] = first.x;
    plan[1] = first.y;
    if !ctx.repair_plan(&mut plan) {
        return None;
    }
    Some(ctx.score(&plan))
}

fn mean_score(scores: impl Iterator<Item = Option<f64>>) -> f64 {
    let (sum, n) = scores.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Multiplies every committed decision by `1 ± u`, `u` uniform in
/// `rel_lo..rel_hi` with a random sign, and replays the repaired schedule against
/// realized prices.
///
/// The trial objective is the mean over decision days of the planner's own
/// score for the perturbed trade, taken from the baseline state of that day,
/// so a schedule at a local optimum of its daily objectives is beaten only
/// by chance.
pub fn perturb_schedule(report: &BacktestReport, market: &Market, spec: &PerturbationSpec) -> Result<PerturbationOutcome> {
    spec.validate()?;
    let i0 = check_alignment(report, market)?;
    let config = &report.config;
    let gold = market.gold.prices();
    let btc = market.btc.prices();

    let baseline_objective = mean_score(
        report
            .records
            .iter()
            .enumerate()
            .map(|(k, r)| day_score(report, market, i0 + k, k, r.decision)),
    );
    let baseline = backtest::replay(
        market,
        report.records[0].date,
        &report.decisions(),
        report.records[0].state.value,
        &config.rates,
        config.risk.delta,
    )?;

    let run_trial = |trial: usize| -> TrialResult {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(trial as u64 + 1);
        let mut state: PortfolioState = report.records[0].state;
        let mut scores = Vec::with_capacity(report.records.len());
        let mut aborted = false;
        for (k, r) in report.records.iter().enumerate() {
            let i = i0 + k;
            let mut factor = || {
                let u = if spec.rel_hi > spec.rel_lo {
                    rng.random_range(spec.rel_lo..=spec.rel_hi)
                } else {
                    spec.rel_lo
                };
                if rng.random::<bool>() {
                    1.0 + u
                } else {
                    1.0 - u
                }
            };
            let (fx, fy) = (factor(), factor());
            let raw = TradeDecision::new(r.decision.x * fx, r.decision.y * fy);
            scores.push(day_score(report, market, i, k, raw));
            let gold_open = market.calendar.gold_open_at(i);
            let Some(d) = portfolio::repair(&state, raw, &config.rates, gold_open, config.risk.delta) else {
                aborted = true;
                break;
            };
            let step = DayReturns::from_prices(gold[i], gold[i + 1], btc[i], btc[i + 1]);
            match portfolio::state_step(&state, d, step, &config.rates) {
                Ok(s) => state = s,
                Err(_) => {
                    aborted = true;
                    break;
                }
            }
        }
        TrialResult {
            trial,
            final_value: if aborted { f64::NAN } else { state.value },
            objective: mean_score(scores.into_iter()),
            aborted,
        }
    };
    let trials = if config.pso.parallel {
        (0..spec.trials).into_par_iter().map(run_trial).collect()
    } else {
        (0..spec.trials).map(run_trial).collect()
    };
    Ok(PerturbationOutcome {
        baseline_final_value: baseline.final_value,
        baseline_objective,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub label: String,
    pub final_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Knob {
    None,
    InitialCash,
    Alpha,
    Beta,
}

/// The rerun set: unchanged, more capital, and each commission rate up and
/// down by a tenth of a percent.
const DELTAS: [(&str, Knob, f64); 6] = [
    ("+0%", Knob::None, 0.0),
    ("+0.1%V0", Knob::InitialCash, 0.001),
    ("+0.1%α", Knob::Alpha, 0.001),
    ("+0.1%β", Knob::Beta, 0.001),
    ("-0.1%α", Knob::Alpha, -0.001),
    ("-0.1%β", Knob::Beta, -0.001),
];

/// Labels of the rows [`parameter_sensitivity`] returns, in order.
pub fn sensitivity_labels() -> Vec<&'static str> {
    DELTAS.iter().map(|d| d.0).collect()
}

/// Config with one parameter nudged. Rates scale relatively unless
/// `absolute_points` is set, in which case the change is added to the rate.
fn nudged(config: &BacktestConfig, knob: Knob, change: f64, absolute_points: bool) -> BacktestConfig {
    let mut c = config.clone();
    let shift = |v: &mut f64| {
        if absolute_points {
            *v += change;
        } else {
            *v *= 1.0 + change;
        }
    };
    match knob {
        Knob::None => {}
        Knob::InitialCash => c.initial_cash *= 1.0 + change,
        Knob::Alpha => shift(&mut c.rates.alpha),
        Knob::Beta => shift(&mut c.rates.beta),
    }
    c
}

/// Reruns (and re-optimizes) the backtest once per nudged parameter.
pub fn parameter_sensitivity(
    config: &BacktestConfig,
    market: &Market,
    forecaster: &dyn PriceForecaster,
    strategy: Strategy,
    absolute_points: bool,
) -> Result<Vec<SensitivityRow>> {
    DELTAS
        .iter()
        .map(|&(label, knob, change)| {
            let c = nudged(config, knob, change, absolute_points);
            let report = match strategy {
                Strategy::Pso => backtest::run_with(market, &c, forecaster)?,
                Strategy::Markowitz => backtest::run_markowitz_with(market, &c, forecaster)?,
            };
            Ok(SensitivityRow {
                label: label.to_string(),
                final_value: report.final_value,
            })
        })
        .collect()
}

/// Writes `trial,final_value,objective,aborted` with the baseline first.
pub fn write_trials_csv(outcome: &PerturbationOutcome, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["trial", "final_value", "objective", "aborted"])?;
    w.write_record([
        "baseline".to_string(),
        outcome.baseline_final_value.to_string(),
        outcome.baseline_objective.to_string(),
        "0".to_string(),
    ])?;
    for t in &outcome.trials {
        w.write_record([
            t.trial.to_string(),
            t.final_value.to_string(),
            t.objective.to_string(),
            u8::from(t.aborted).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// Writes `label,final_value`.
pub fn write_rows_csv(rows: &[SensitivityRow], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["label", "final_value"])?;
    for r in rows {
        w.write_record([r.label.clone(), r.final_value.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtest::{AssetForecast, BacktestConfig};
    use crate::market_data::{Asset, PriceSeries, TradingCalendar};
    use crate::risk::Personality;
    use chrono::NaiveDate;

    struct Trend;

    impl PriceForecaster for Trend {
        fn forecast(&self, _asset: Asset, h: &[f64]) -> Result<AssetForecast> {
            let p = h[h.len() - 1];
            let s = if h.len() > 1 { p - h[h.len() - 2] } else { 0.0 };
            let points = [p + s, p + 2.0 * s, p + 3.0 * s];
            Ok(AssetForecast {
                points,
                sigma: crate::forecaster::population_std(&points),
                window: h.len(),
                r2: 1.0,
            })
        }
    }

    fn setup() -> (Market, BacktestConfig) {
        let start = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
        let n = 30;
        let gold: Vec<f64> = (0..n).map(|k| 100.0 + 2.0 * (k as f64 * 0.4).sin()).collect();
        let btc: Vec<f64> = (0..n).map(|k| 100.0 + 15.0 * (k as f64 * 0.3).sin() + k as f64).collect();
        let m = Market {
            gold: PriceSeries::from_daily(Asset::Gold, start, &gold).unwrap(),
            btc: PriceSeries::from_daily(Asset::Bitcoin, start, &btc).unwrap(),
            calendar: TradingCalendar::weekdays(start, n),
        };
        let mut c = BacktestConfig::new(start + chrono::Days::new(2), start + chrono::Days::new(25));
        c.risk.personality = Personality::Crazy;
        c.pso.n_particles = 20;
        c.pso.max_iters = 40;
        (m, c)
    }

    #[test]
    fn zero_perturbation_reproduces_the_baseline() {
        let (m, c) = setup();
        let r = backtest::run_with(&m, &c, &Trend).unwrap();
        let spec = PerturbationSpec {
            rel_lo: 0.0,
            rel_hi: 0.0,
            trials: 3,
            seed: 1,
        };
        let out = perturb_schedule(&r, &m, &spec).unwrap();
        assert_eq!(out.baseline_final_value, r.final_value);
        for t in &out.trials {
            assert_eq!(t.final_value, r.final_value);
            assert_eq!(t.objective, out.baseline_objective);
        }
        assert_eq!(out.beat_fraction(), 0.0);
    }

    #[test]
    fn trials_are_deterministic() {
        let (m, c) = setup();
        let r = backtest::run_with(&m, &c, &Trend).unwrap();
        let spec = PerturbationSpec {
            trials: 5,
            seed: 7,
            ..Default::default()
        };
        let a = perturb_schedule(&r, &m, &spec).unwrap();
        let b = perturb_schedule(&r, &m, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials.len(), 5);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let spec = PerturbationSpec {
            trials: 0,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn parameter_rows_have_fixed_labels_and_identity_baseline() {
        let (m, c) = setup();
        let rows = parameter_sensitivity(&c, &m, &Trend, Strategy::Pso, false).unwrap();
        let labels: Vec<_> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, sensitivity_labels());
        let base = backtest::run_with(&m, &c, &Trend).unwrap();
        assert_eq!(rows[0].final_value, base.final_value);
    }

    #[test]
    fn nudges_are_relative_by_default() {
        let (_, c) = setup();
        assert!((nudged(&c, Knob::Alpha, 0.001, false).rates.alpha - 0.01001).abs() < 1e-15);
        assert!((nudged(&c, Knob::Beta, -0.001, true).rates.beta - 0.019).abs() < 1e-15);
        assert!((nudged(&c, Knob::InitialCash, 0.001, false).initial_cash - 1001.0).abs() < 1e-9);
    }
}
