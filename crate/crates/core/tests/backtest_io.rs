mod common;

use std::sync::Mutex;

use common::{market, waves, ymd, Trend};
use ctp_core::backtest::{
    self, read_report_csv, read_summary_json, write_report_csv, write_summary_json, AssetForecast,
    PriceForecaster,
};
use ctp_core::market_data::{Asset, Market};
use ctp_core::portfolio::CommissionRates;
use ctp_core::risk::Personality;
use ctp_core::{BacktestConfig, BacktestReport, Error, Result};

fn quick_config(m: &Market, start: usize, end: usize, personality: Personality) -> BacktestConfig {
    let day = |i: usize| m.gold.points()[i].date;
    let mut c = BacktestConfig::new(day(start), day(end));
    c.pso.n_particles = 20;
    c.pso.max_iters = 30;
    c.risk.personality = personality;
    c
}

/// Trend forecasts that give up every seventh day, to exercise fallbacks.
struct Flaky;

impl PriceForecaster for Flaky {
    fn forecast(&self, asset: Asset, history: &[f64]) -> Result<AssetForecast> {
        if history.len() % 7 == 0 {
            return Err(Error::Numerical("flaky".into()));
        }
        Trend.forecast(asset, history)
    }
}

fn flaky_report() -> (Market, BacktestReport) {
    let (g, b) = waves(60);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let c = quick_config(&m, 20, 45, Personality::Middle);
    let r = backtest::run_with(&m, &c, &Flaky).unwrap();
    (m, r)
}

/// Debug output distinguishes every f64, NaN and signed zero included.
fn same(a: &BacktestReport, b: &BacktestReport) -> bool {
    format!("{a:?}") == format!("{b:?}")
}

#[test]
fn report_round_trips_through_csv_and_json() {
    let (_, report) = flaky_report();
    assert!(report.records.iter().any(|r| r.fallback));
    assert!(report.records.iter().any(|r| !r.fallback));
    let dir = tempfile::tempdir().unwrap();
    write_report_csv(&report, dir.path().join("report.csv")).unwrap();
    write_summary_json(&report, dir.path().join("summary.json")).unwrap();

    let records = read_report_csv(dir.path().join("report.csv")).unwrap();
    let summary = read_summary_json(dir.path().join("summary.json")).unwrap();
    assert_eq!(summary.final_value.to_bits(), report.final_value.to_bits());
    assert_eq!(summary.days, report.records.len());
    let back = summary.into_report(records).unwrap();
    assert!(same(&back, &report));
}

#[test]
fn reading_a_foreign_csv_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    std::fs::write(&path, "date,value\n2021-01-01,3\n").unwrap();
    assert!(read_report_csv(&path).is_err());
}

#[test]
fn runs_are_deterministic() {
    let (_, a) = flaky_report();
    let (_, b) = flaky_report();
    assert!(same(&a, &b));
}

#[test]
fn different_seeds_still_replay_to_their_values() {
    let (g, b) = waves(60);
    let m = market(ymd(2021, 3, 1), &g, &b);
    for seed in [1, 2] {
        let mut c = quick_config(&m, 20, 40, Personality::Crazy);
        c.pso.seed = seed;
        let r = backtest::run_with(&m, &c, &Trend).unwrap();
        let rp = backtest::replay(&m, c.start_date, &r.decisions(), c.initial_cash, &c.rates, c.risk.delta).unwrap();
        assert_eq!(rp.final_value, r.final_value);
        for (s, rec) in rp.states.iter().zip(&r.records) {
            assert_eq!(*s, rec.state);
        }
    }
}

#[test]
fn frozen_schedule_scales_with_initial_value() {
    let (g, b) = waves(60);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let c = quick_config(&m, 20, 45, Personality::Crazy);
    let r = backtest::run_with(&m, &c, &Trend).unwrap();
    let k = 1.001;
    let rp = backtest::replay(&m, c.start_date, &r.decisions(), k * c.initial_cash, &c.rates, c.risk.delta).unwrap();
    assert!((rp.final_value / (k * r.final_value) - 1.0).abs() < 1e-9);
}

#[test]
fn replay_rejects_an_infeasible_schedule() {
    let (g, b) = waves(30);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let bad = [ctp_core::portfolio::TradeDecision::new(0.0, 2.0)];
    let err = backtest::replay(&m, ymd(2021, 3, 3), &bad, 1000.0, &CommissionRates::default(), 0.0);
    assert!(matches!(err, Err(Error::Infeasible(_))));
}

/// Checks that every forecast sees exactly the prices up to its day.
struct Watchful {
    gold: Vec<f64>,
    btc: Vec<f64>,
    seen: Mutex<Vec<usize>>,
}

impl PriceForecaster for Watchful {
    fn forecast(&self, asset: Asset, history: &[f64]) -> Result<AssetForecast> {
        let truth = match asset {
            Asset::Gold => &self.gold,
            Asset::Bitcoin => &self.btc,
        };
        assert_eq!(history, &truth[..history.len()]);
        self.seen.lock().unwrap().push(history.len());
        Trend.forecast(asset, history)
    }
}

#[test]
fn forecasts_never_see_the_future() {
    let (g, b) = waves(60);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let c = quick_config(&m, 20, 40, Personality::Stable);
    let w = Watchful {
        gold: g.clone(),
        btc: b.clone(),
        seen: Mutex::new(Vec::new()),
    };
    backtest::run_with(&m, &c, &w).unwrap();
    let seen = w.seen.into_inner().unwrap();
    let expected: Vec<usize> = (20..40).flat_map(|i| [i + 1, i + 1]).collect();
    assert_eq!(seen, expected);
}

#[test]
fn later_prices_do_not_change_earlier_decisions() {
    let (g, b) = waves(60);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let c = quick_config(&m, 20, 45, Personality::Middle);
    let base = backtest::run_with(&m, &c, &Trend).unwrap();
    let k = 32;
    let scale = |v: &[f64], f: f64| -> Vec<f64> {
        v.iter().enumerate().map(|(i, p)| if i > k { p * f } else { *p }).collect()
    };
    let shocked = market(ymd(2021, 3, 1), &scale(&g, 1.7), &scale(&b, 0.6));
    let other = backtest::run_with(&shocked, &c, &Trend).unwrap();
    for (a, b) in base.records.iter().zip(&other.records).take(k - 20 + 1) {
        assert_eq!(a.decision.x.to_bits(), b.decision.x.to_bits());
        assert_eq!(a.decision.y.to_bits(), b.decision.y.to_bits());
    }
    // The shock is visible from the next day on.
    assert_ne!(base.records[k - 20 + 1].gold_forecast, other.records[k - 20 + 1].gold_forecast);
}

#[test]
fn markowitz_runs_replay_exactly() {
    let (g, b) = waves(120);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let c = quick_config(&m, 70, 100, Personality::Crazy);
    let r = backtest::run_markowitz_with(&m, &c, &Trend).unwrap();
    assert_eq!(r.records.len(), 30);
    let rp = backtest::replay(&m, c.start_date, &r.decisions(), c.initial_cash, &c.rates, c.risk.delta).unwrap();
    assert_eq!(rp.final_value, r.final_value);
}

#[test]
fn dates_outside_the_data_are_rejected() {
    let (g, b) = waves(30);
    let m = market(ymd(2021, 3, 1), &g, &b);
    let c = BacktestConfig::new(ymd(2021, 3, 10), ymd(2021, 6, 1));
    assert!(matches!(backtest::run_with(&m, &c, &Trend), Err(Error::Data(_))));
}
