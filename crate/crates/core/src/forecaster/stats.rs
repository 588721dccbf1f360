use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Applies the first-difference operator `d` times.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    if d >= series.len() && d > 0 {
        return Err(Error::InsufficientData {
            needed: d + 1,
            available: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// First value of each intermediate difference `∇^k y`, `k = 0..d`. Together
/// with `∇^d y` these determine `y`.
pub fn difference_heads(series: &[f64], d: usize) -> Result<Vec<f64>> {
    (0..d).map(|k| difference(series, k).map(|s| s[0])).collect()
}

/// Inverse of [`difference`]: rebuilds the series from its `d`-th difference
/// and the heads returned by [`difference_heads`].
pub fn integrate(diffs: &[f64], heads: &[f64]) -> Vec<f64> {
    let mut out = diffs.to_vec();
    for &head in heads.iter().rev() {
        let mut level = Vec::with_capacity(out.len() + 1);
        let mut acc = head;
        level.push(acc);
        for z in &out {
            acc += z;
            level.push(acc);
        }
        out = level;
    }
    out
}

fn centered(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let dev: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let ss: f64 = dev.iter().map(|v| v * v).sum();
    if !(ss > f64::EPSILON * mean.abs().max(1.0) * n) {
        return Err(Error::Degenerate("series has zero variance".into()));
    }
    Ok((dev, ss))
}

/// Biased sample autocorrelations for lags `0..=max_lag`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            available: series.len(),
        });
    }
    let (dev, ss) = centered(series)?;
    Ok((0..=max_lag)
        .map(|k| {
            if k == 0 {
                return 1.0;
            }
            dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / ss
        })
        .collect())
}

/// Partial autocorrelations for lags `0..=max_lag` by Durbin–Levinson.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let rho = acf(series, max_lag)?;
    Ok(pacf_from_acf(&rho))
}

pub(crate) fn pacf_from_acf(rho: &[f64]) -> Vec<f64> {
    let max_lag = rho.len() - 1;
    let mut out = vec![1.0; max_lag + 1];
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut v = 1.0;
    for k in 1..=max_lag {
        let num = rho[k] - phi.iter().enumerate().map(|(j, p)| p * rho[k - 1 - j]).sum::<f64>();
        let kk = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kk * prev[prev.len() - 1 - j];
        }
        phi.push(kk);
        v *= 1.0 - kk * kk;
        out[k] = kk;
    }
    out
}

/// Coefficient of determination `1 - SSE/SST`.
pub fn r_squared(actual: &[f64], fitted: &[f64]) -> Result<f64> {
    if actual.len() != fitted.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch ({} vs {})",
            actual.len(),
            fitted.len()
        )));
    }
    if actual.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: actual.len(),
        });
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let sst: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::Degenerate("actual values have zero variance".into()));
    }
    let sse: f64 = actual.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum();
    Ok(1.0 - sse / sst)
}

#[derive(Debug, Clone, Serialize)]
pub struct WhiteNoiseReport {
    pub lags: usize,
    pub degrees_of_freedom: usize,
    /// Ljung–Box Q.
    pub q_stat: f64,
    pub p_value: f64,
    /// True when whiteness is not rejected at the 5% level.
    pub pass: bool,
    pub max_abs_acf: f64,
}

pub const WHITE_NOISE_SIGNIFICANCE: f64 = 0.05;

/// Ljung–Box test of residual whiteness. `fitted_params` (p + q) is removed
/// from the degrees of freedom.
pub fn white_noise_check(residuals: &[f64], lags: usize, fitted_params: usize) -> Result<WhiteNoiseReport> {
    if lags == 0 {
        return Err(Error::InvalidArgument("at least one lag is required".into()));
    }
    if residuals.len() <= lags {
        return Err(Error::InsufficientData {
            needed: lags + 1,
            available: residuals.len(),
        });
    }
    let rho = acf(residuals, lags)?;
    let n = residuals.len() as f64;
    let q_stat = n * (n + 2.0)
        * rho[1..]
            .iter()
            .enumerate()
            .map(|(i, r)| r * r / (n - (i + 1) as f64))
            .sum::<f64>();
    let dof = lags.saturating_sub(fitted_params).max(1);
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let p_value = 1.0 - chi.cdf(q_stat);
    Ok(WhiteNoiseReport {
        lags,
        degrees_of_freedom: dof,
        q_stat,
        p_value,
        pass: p_value > WHITE_NOISE_SIGNIFICANCE,
        max_abs_acf: rho[1..].iter().map(|r| r.abs()).fold(0.0, f64::max),
    })
}

/// Population standard deviation.
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}
