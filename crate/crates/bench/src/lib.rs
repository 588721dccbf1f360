//! Fixtures shared by the benchmarks.

use ctp_core::market_data::{Asset, Market, PriceSeries, TradingCalendar};
use ctp_core::NaiveDate;

/// Deterministic wavy price path with a slow trend.
pub fn wave(n: usize, base: f64, amp: f64, trend: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let t = k as f64;
            base * (1.0 + trend * t) + amp * (0.13 * t).sin() + 0.3 * amp * (0.71 * t).cos()
        })
        .collect()
}

/// A weekday-gold market of `n` days starting 2020-01-06.
pub fn market(n: usize) -> Market {
    let start = NaiveDate::from_ymd_opt(2020, 1, 6).unwrap();
    Market {
        gold: PriceSeries::from_daily(Asset::Gold, start, &wave(n, 1500.0, 20.0, 1e-4)).unwrap(),
        btc: PriceSeries::from_daily(Asset::Bitcoin, start, &wave(n, 9000.0, 600.0, 2e-3)).unwrap(),
        calendar: TradingCalendar::weekdays(start, n),
    }
}
