//! Price forecasting: ARIMA identification, fitting and three-day forecasts,
//! plus window-length selection.

mod arima;
mod stats;
mod window;

pub use arima::{
    fit, fit_r_squared, fit_with, forecast, roots_outside_unit_circle, ArimaFit, ArimaSpec, FitOptions,
    Forecast,
};
pub use stats::{
    acf, difference, difference_heads, integrate, pacf, population_std, r_squared, white_noise_check,
    WhiteNoiseReport, WHITE_NOISE_SIGNIFICANCE,
};
pub use window::{
    adaptive_window, default_candidates, hill_climb, optimal_window, window_r2, ScanOptions, WindowChoice,
    WindowScan, ADAPTIVE_STEP_BUDGET,
};

/// Days ahead predicted for each trading decision.
pub const HORIZON: usize = 3;

/// Window length the adaptive search starts from.
pub const DEFAULT_WINDOW: usize = 60;
