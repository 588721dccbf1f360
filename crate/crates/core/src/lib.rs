//! Daily gold and bitcoin trading model.
//!
//! Prices are gap-filled with a shape-preserving Hermite interpolant, each
//! asset is forecast three days ahead by an ARIMA model on an adaptive trailing
//! window, and a particle swarm chooses the next three days of trades to
//! maximize one of three investor objectives over a normalized portfolio
//! state. Markowitz baselines and perturbation/sensitivity harnesses sit on
//! top of the same machinery.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod config;
pub mod error;
pub mod forecaster;
pub mod market_data;
pub mod optim;
pub mod portfolio;
pub mod pso;
pub mod risk;
pub mod sensitivity;

pub use chrono::NaiveDate;
pub use backtest::{BacktestConfig, BacktestReport, DailyRecord, Strategy, WindowPolicy};
pub use config::RunConfig;
pub use error::{Error, ErrorKind, Result};
pub use forecaster::{ArimaFit, ArimaSpec, Forecast, WindowChoice};
pub use market_data::{Asset, Market, PricePoint, PriceSeries, Source, TradingCalendar};
pub use portfolio::{CommissionMode, CommissionRates, DayReturns, Holdings, PortfolioState, TradeDecision};
pub use pso::{Bounds, Constraint, PsoConfig};
pub use risk::{Personality, RiskParams};
pub use sensitivity::{PerturbationSpec, SensitivityRow};
