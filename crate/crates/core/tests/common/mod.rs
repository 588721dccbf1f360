#![allow(dead_code)]

use std::path::PathBuf;

use ctp_core::backtest::{AssetForecast, PriceForecaster};
use ctp_core::forecaster::population_std;
use ctp_core::market_data::{Asset, Market, PriceSeries, TradingCalendar};
use ctp_core::{NaiveDate, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Simulates ARIMA(1,1,1) with unit innovations:
/// `z_t = phi z_{t-1} + e_t + theta e_{t-1}`, integrated once from `level`.
pub fn simulate_arima111(n: usize, phi: f64, theta: f64, level: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let burn = 200;
    let (mut z_prev, mut e_prev) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    let mut x = level;
    for t in 0..burn + n {
        let e: f64 = normal.sample(&mut rng);
        let z = phi * z_prev + e + theta * e_prev;
        z_prev = z;
        e_prev = e;
        if t >= burn {
            x += z;
            out.push(x);
        }
    }
    out
}

/// Market over consecutive days from `start` with gold closed on weekends.
pub fn market(start: NaiveDate, gold: &[f64], btc: &[f64]) -> Market {
    Market {
        gold: PriceSeries::from_daily(Asset::Gold, start, gold).unwrap(),
        btc: PriceSeries::from_daily(Asset::Bitcoin, start, btc).unwrap(),
        calendar: TradingCalendar::weekdays(start, gold.len()),
    }
}

/// Cheap stand-in forecaster: extrapolates the last daily move.
pub struct Trend;

impl PriceForecaster for Trend {
    fn forecast(&self, _asset: Asset, h: &[f64]) -> Result<AssetForecast> {
        let p = h[h.len() - 1];
        let s = if h.len() > 1 { p - h[h.len() - 2] } else { 0.0 };
        let points = [p + s, p + 2.0 * s, p + 3.0 * s];
        Ok(AssetForecast {
            points,
            sigma: population_std(&points),
            window: h.len(),
            r2: 1.0,
        })
    }
}

/// Wavy positive price paths for quick backtests.
pub fn waves(n: usize) -> (Vec<f64>, Vec<f64>) {
    let gold = (0..n).map(|k| 1500.0 + 25.0 * (k as f64 * 0.35).sin() + 0.5 * k as f64).collect();
    let btc = (0..n)
        .map(|k| 9000.0 + 900.0 * (k as f64 * 0.27).sin() + 400.0 * (k as f64 * 0.9).cos() + 15.0 * k as f64)
        .collect();
    (gold, btc)
}
