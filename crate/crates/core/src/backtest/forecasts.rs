use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{self, ArimaSpec, HORIZON};
use crate::market_data::Asset;

/// How the forecaster's trailing window is chosen each day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "policy", content = "days")]
pub enum WindowPolicy {
    Fixed(usize),
    /// Hill-climb from the given starting length every day.
    Adaptive(usize),
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Adaptive(forecaster::DEFAULT_WINDOW)
    }
}

/// Three-day outlook for one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssetForecast {
    pub points: [f64; HORIZON],
    /// Population standard deviation of `points`.
    pub sigma: f64,
    pub window: usize,
    pub r2: f64,
}

/// Source of price forecasts. Implementations see only the history up to and
/// including the decision day; the last element of `history` is today's price.
pub trait PriceForecaster: Sync {
    fn forecast(&self, asset: Asset, history: &[f64]) -> Result<AssetForecast>;
}

#[derive(Debug, Clone, Copy)]
pub struct ArimaForecaster {
    pub spec: ArimaSpec,
    pub window: WindowPolicy,
}

impl PriceForecaster for ArimaForecaster {
    fn forecast(&self, _asset: Asset, history: &[f64]) -> Result<AssetForecast> {
        let choice = match self.window {
            WindowPolicy::Fixed(t) => {
                let r2 = forecaster::window_r2(history, self.spec, t)?;
                forecaster::WindowChoice { t, r2 }
            }
            WindowPolicy::Adaptive(t0) => forecaster::adaptive_window(history, self.spec, t0)?,
        };
        let window = &history[history.len() - choice.t..];
        let fit = forecaster::fit(window, self.spec)?;
        let f = forecaster::forecast(&fit, window, HORIZON)?;
        if f.points.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::Numerical(format!("non-positive price forecast {:?}", f.points)));
        }
        Ok(AssetForecast {
            points: [f.points[0], f.points[1], f.points[2]],
            sigma: f.sigma,
            window: choice.t,
            r2: choice.r2,
        })
    }
}

/// Memoizes another forecaster by `(asset, history length)`.
///
/// Only valid while every call draws its history from the same price series,
/// as within repeated backtests over one market.
pub struct MemoForecaster<F> {
    inner: F,
    cache: Mutex<HashMap<(Asset, usize), Result<AssetForecast, String>>>,
}

impl<F: PriceForecaster> MemoForecaster<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<F: PriceForecaster> PriceForecaster for MemoForecaster<F> {
    fn forecast(&self, asset: Asset, history: &[f64]) -> Result<AssetForecast> {
        let key = (asset, history.len());
        if let Some(hit) = self.cache.lock().expect("forecast cache poisoned").get(&key) {
            return hit.clone().map_err(Error::Numerical);
        }
        let value = self.inner.forecast(asset, history).map_err(|e| e.to_string());
        self.cache
            .lock()
            .expect("forecast cache poisoned")
            .insert(key, value.clone());
        value.map_err(Error::Numerical)
    }
}
