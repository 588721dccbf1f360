//! ARIMA(p, d, q) estimation by conditional sum of squares.
//!
//! The AR and MA polynomials are parameterized through partial
//! autocorrelations (`tanh` of an unconstrained value, then Durbin–Levinson),
//! so every candidate the optimizer visits is stationary and invertible.

use serde::{Deserialize, Serialize};

use super::stats::{difference, population_std};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Bound on transformed partial autocorrelations, keeping roots off the unit
/// circle.
const MAX_PARTIAL: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl Default for ArimaSpec {
    fn default() -> Self {
        Self { p: 1, d: 1, q: 1 }
    }
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        let spec = Self { p, d, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p + self.q == 0 {
            return Err(Error::InvalidArgument("ARIMA needs p + q >= 1".into()));
        }
        Ok(())
    }

    /// Smallest series length a fit is attempted on.
    pub fn min_sample(&self) -> usize {
        10 + self.p + self.d + self.q
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Estimate a constant (drift after differencing).
    pub include_constant: bool,
    pub max_evals: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            include_constant: true,
            max_evals: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Mean of the differenced series.
    pub mean: f64,
    /// Constant term of the differenced ARMA equation, `mean * (1 - Σφ)`.
    pub intercept: f64,
    pub sigma2: f64,
    /// The `d`-times differenced input.
    pub differenced: Vec<f64>,
    /// Innovations for differenced indices `p..`.
    pub residuals: Vec<f64>,
    /// In-sample one-step predictions on the original scale, aligned with
    /// `series[d + p..]`.
    pub fitted: Vec<f64>,
    pub converged: bool,
}

impl ArimaFit {
    /// Index into the original series of the first fitted value.
    pub fn first_fitted_index(&self) -> usize {
        self.spec.d + self.spec.p
    }

    /// Builds a fit from known coefficients, computing residuals and fitted
    /// values for `series`. Mostly useful for tests and simulations.
    pub fn from_coefficients(
        series: &[f64],
        spec: ArimaSpec,
        phi: Vec<f64>,
        theta: Vec<f64>,
        mean: f64,
    ) -> Result<Self> {
        if phi.len() != spec.p || theta.len() != spec.q {
            return Err(Error::InvalidArgument("coefficient count does not match spec".into()));
        }
        let z = difference(series, spec.d)?;
        if z.len() <= spec.p {
            return Err(Error::InsufficientData {
                needed: spec.d + spec.p + 1,
                available: series.len(),
            });
        }
        let residuals = css_residuals(&z, mean, &phi, &theta);
        let sse: f64 = residuals.iter().map(|e| e * e).sum();
        let first = spec.d + spec.p;
        let fitted = series[first..]
            .iter()
            .zip(&residuals)
            .map(|(y, e)| y - e)
            .collect();
        Ok(Self {
            intercept: mean * (1.0 - phi.iter().sum::<f64>()),
            sigma2: sse / residuals.len() as f64,
            spec,
            phi,
            theta,
            mean,
            differenced: z,
            residuals,
            fitted,
            converged: true,
        })
    }
}

/// Innovations `e_t`, `t >= p`, with pre-sample innovations set to zero.
fn css_residuals(z: &[f64], mean: f64, phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let p = phi.len();
    let mut e = vec![0.0; z.len()];
    for t in p..z.len() {
        let mut pred = 0.0;
        for (j, ph) in phi.iter().enumerate() {
            pred += ph * (z[t - 1 - j] - mean);
        }
        for (k, th) in theta.iter().enumerate() {
            if t > k {
                pred += th * e[t - 1 - k];
            }
        }
        e[t] = z[t] - mean - pred;
    }
    e.split_off(p)
}

fn css(z: &[f64], mean: f64, phi: &[f64], theta: &[f64]) -> f64 {
    let p = phi.len();
    let mut e = vec![0.0; z.len()];
    let mut sse = 0.0;
    for t in p..z.len() {
        let mut pred = 0.0;
        for (j, ph) in phi.iter().enumerate() {
            pred += ph * (z[t - 1 - j] - mean);
        }
        for (k, th) in theta.iter().enumerate() {
            if t > k {
                pred += th * e[t - 1 - k];
            }
        }
        e[t] = z[t] - mean - pred;
        sse += e[t] * e[t];
    }
    sse
}

/// Maps partial autocorrelations in (-1, 1) to the coefficients of a
/// stationary AR polynomial `1 - Σ a_j B^j`.
pub(crate) fn partials_to_ar(partials: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::with_capacity(partials.len());
    for &r in partials {
        let prev = a.clone();
        for j in 0..a.len() {
            a[j] = prev[j] - r * prev[prev.len() - 1 - j];
        }
        a.push(r);
    }
    a
}

fn bounded(u: f64) -> f64 {
    (u.tanh()).clamp(-MAX_PARTIAL, MAX_PARTIAL)
}

fn unpack(params: &[f64], spec: ArimaSpec, with_const: bool) -> (f64, Vec<f64>, Vec<f64>) {
    let (mean, rest) = if with_const { (params[0], &params[1..]) } else { (0.0, params) };
    let phi = partials_to_ar(&rest[..spec.p].iter().map(|&u| bounded(u)).collect::<Vec<_>>());
    let theta = partials_to_ar(&rest[spec.p..].iter().map(|&u| bounded(u)).collect::<Vec<_>>())
        .into_iter()
        .map(|a| -a)
        .collect();
    (mean, phi, theta)
}

/// Fits with default options.
pub fn fit(series: &[f64], spec: ArimaSpec) -> Result<ArimaFit> {
    fit_with(series, spec, &FitOptions::default())
}

/// Conditional-sum-of-squares fit of an ARIMA model. Fits that exhaust the
/// evaluation budget are returned with `converged == false`.
pub fn fit_with(series: &[f64], spec: ArimaSpec, opts: &FitOptions) -> Result<ArimaFit> {
    spec.validate()?;
    if series.len() < spec.min_sample() {
        return Err(Error::InsufficientData {
            needed: spec.min_sample(),
            available: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series contains non-finite values".into()));
    }
    let z = difference(series, spec.d)?;
    let z_mean = z.iter().sum::<f64>() / z.len() as f64;
    let scale = population_std(&z);
    if !(scale > 1e-12 * z_mean.abs().max(series.iter().fold(0.0f64, |m, v| m.max(v.abs())))) {
        return Err(Error::Degenerate(format!(
            "series is constant after differencing {} time(s)",
            spec.d
        )));
    }
    // Work on a unit-scale copy for conditioning.
    let zs: Vec<f64> = z.iter().map(|v| v / scale).collect();

    let with_const = opts.include_constant;
    let lag1 = {
        let m = zs.iter().sum::<f64>() / zs.len() as f64;
        let num: f64 = zs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let den: f64 = zs.iter().map(|v| (v - m).powi(2)).sum();
        (num / den).clamp(-0.9, 0.9)
    };
    let mut start = Vec::with_capacity(1 + spec.p + spec.q);
    if with_const {
        start.push(z_mean / scale);
    }
    for j in 0..spec.p {
        start.push(if j == 0 { lag1.atanh() } else { 0.0 });
    }
    start.extend(std::iter::repeat_n(0.0, spec.q));

    let objective = |params: &[f64]| {
        let (mean, phi, theta) = unpack(params, spec, with_const);
        css(&zs, mean, &phi, &theta)
    };
    let nm = NelderMeadOptions {
        max_evals: opts.max_evals,
        step: 0.3,
        ..Default::default()
    };
    let mut best = nelder_mead(objective, &start, &nm);
    // A restart from the first optimum shakes off premature simplex collapse.
    let restart = nelder_mead(objective, &best.x, &nm);
    let converged = restart.converged || best.converged;
    if restart.value <= best.value {
        best = restart;
    }
    if !best.value.is_finite() {
        return Err(Error::Numerical("CSS objective is not finite".into()));
    }

    let (mean_s, phi, theta) = unpack(&best.x, spec, with_const);
    let mut out = ArimaFit::from_coefficients(series, spec, phi, theta, mean_s * scale)?;
    out.converged = converged;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Forecast {
    pub horizon: usize,
    /// Point predictions on the original scale.
    pub points: Vec<f64>,
    /// Population standard deviation of `points`.
    pub sigma: f64,
}

/// Iterates the fitted recursion forward with future innovations set to zero
/// and integrates back to the original scale. `last_values` is the tail of the
/// series the model was fitted on (at least `d` values).
pub fn forecast(fit: &ArimaFit, last_values: &[f64], horizon: usize) -> Result<Forecast> {
    let spec = fit.spec;
    if horizon == 0 {
        return Err(Error::InvalidArgument("forecast horizon must be >= 1".into()));
    }
    if last_values.len() < spec.d {
        return Err(Error::InsufficientData {
            needed: spec.d,
            available: last_values.len(),
        });
    }
    let n = fit.differenced.len();
    let mut w: Vec<f64> = fit.differenced.iter().map(|v| v - fit.mean).collect();
    let mut e = vec![0.0; n - fit.residuals.len()];
    e.extend_from_slice(&fit.residuals);

    // Last value of each difference level ∇^k y, k = 0..d.
    let mut tails: Vec<f64> = (0..spec.d)
        .map(|k| {
            let diffed = difference(&last_values[last_values.len() - spec.d..], k)
                .expect("tail length checked above");
            *diffed.last().expect("non-empty")
        })
        .collect();

    let mut points = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let t = w.len();
        let mut next = 0.0;
        for (j, ph) in fit.phi.iter().enumerate() {
            if t > j {
                next += ph * w[t - 1 - j];
            }
        }
        for (k, th) in fit.theta.iter().enumerate() {
            if t > k {
                next += th * e[t - 1 - k];
            }
        }
        w.push(next);
        e.push(0.0);
        let mut level = next + fit.mean;
        for k in (0..spec.d).rev() {
            level += tails[k];
            tails[k] = level;
        }
        points.push(level);
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite forecast".into()));
    }
    Ok(Forecast {
        horizon,
        sigma: population_std(&points),
        points,
    })
}

/// Coefficient of determination of the in-sample fit on the original scale.
pub fn fit_r_squared(series: &[f64], fit: &ArimaFit) -> Result<f64> {
    super::stats::r_squared(&series[fit.first_fitted_index()..], &fit.fitted)
}

/// Roots of `1 + c_1 z + ... + c_k z^k` all lie outside the unit circle by at
/// least `tol`. Checked through the Schur–Cohn (step-down) recursion.
pub fn roots_outside_unit_circle(coeffs: &[f64], tol: f64) -> bool {
    // Step-down on a(z) = 1 + c1 z + ...: reflection coefficients must have
    // modulus below one.
    let mut a: Vec<f64> = coeffs.iter().map(|c| -c).collect();
    while let Some(&k) = a.last() {
        if k.abs() >= 1.0 - tol {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1).map(|j| (a[j] + k * a[m - 2 - j]) / denom).collect();
        a = prev;
    }
    true
}
