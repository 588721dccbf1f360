//! Risk and return measures: Markowitz moments and frontier, the Sharpe
//! ratio, and the per-personality objectives the daily optimizer maximizes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::population_std;

/// Stand-in for an infinite Sharpe ratio when returns have no spread.
pub const SHARPE_CAP: f64 = 1e12;

/// Investor personality: which objective the daily plan maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Personality {
    /// Terminal value after three days.
    Crazy,
    /// Sharpe ratio of the three planned daily returns.
    Stable,
    /// Three-day value change minus `golden * sigma`.
    Middle,
}

impl Personality {
    pub const ALL: [Personality; 3] = [Personality::Crazy, Personality::Stable, Personality::Middle];
}

impl fmt::Display for Personality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Personality::Crazy => "crazy",
            Personality::Stable => "stable",
            Personality::Middle => "middle",
        })
    }
}

impl FromStr for Personality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "crazy" => Ok(Personality::Crazy),
            "stable" => Ok(Personality::Stable),
            "middle" => Ok(Personality::Middle),
            other => Err(Error::InvalidArgument(format!(
                "unknown personality {other:?} (expected crazy, stable or middle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Minimum cash fraction after each trade.
    pub delta: f64,
    /// Daily risk-free return.
    pub y_f: f64,
    /// Risk weight of the middle personality.
    pub golden: f64,
    pub personality: Personality,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            delta: 0.0,
            y_f: 0.0,
            golden: 0.618,
            personality: Personality::Middle,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!("delta must be in [0, 1], got {}", self.delta)));
        }
        if !(self.golden > 0.0) {
            return Err(Error::InvalidArgument(format!("golden must be positive, got {}", self.golden)));
        }
        if !self.y_f.is_finite() {
            return Err(Error::InvalidArgument("risk-free rate must be finite".into()));
        }
        Ok(())
    }
}

/// Long-only allocation weights, one per asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationWeights(Vec<f64>);

impl AllocationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "weights must be non-negative and sum to 1, got {weights:?}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample covariance (divisor `n - 1`).
fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64
}

/// Mean vector and covariance matrix of per-asset return samples.
pub fn sample_moments(returns: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let Some(first) = returns.first() else {
        return Err(Error::InvalidArgument("no assets".into()));
    };
    let n = first.len();
    if returns.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("return samples differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, available: n });
    }
    let means = returns.iter().map(|r| mean(r)).collect();
    let cov = returns
        .iter()
        .map(|a| returns.iter().map(|b| covariance(a, b)).collect())
        .collect();
    Ok((means, cov))
}

fn quadratic(w: &[f64], means: &[f64], cov: &[Vec<f64>]) -> (f64, f64) {
    let m = w.iter().zip(means).map(|(a, b)| a * b).sum();
    let mut v = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            v += wi * wj * cov[i][j];
        }
    }
    (m, v.max(0.0))
}

/// Expected return and variance of a weighted portfolio, from historical
/// samples (one row per asset).
pub fn portfolio_moments(returns: &[Vec<f64>], weights: &AllocationWeights) -> Result<(f64, f64)> {
    if returns.len() != weights.0.len() {
        return Err(Error::InvalidArgument(format!(
            "{} assets but {} weights",
            returns.len(),
            weights.0.len()
        )));
    }
    let (means, cov) = sample_moments(returns)?;
    Ok(quadratic(&weights.0, &means, &cov))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub weights: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// Every long-only weight vector on a grid of the given step, i.e. the
/// compositions of `round(1 / step)` into `assets` parts.
pub fn weight_grid(assets: usize, grid_step: f64) -> Result<Vec<Vec<f64>>> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::InvalidArgument(format!("grid step must be in (0, 0.5], got {grid_step}")));
    }
    if assets == 0 {
        return Ok(Vec::new());
    }
    let k = (1.0 / grid_step).round() as usize;
    let mut out = Vec::new();
    let mut current = vec![0usize; assets];
    fn recurse(pos: usize, left: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.iter().map(|&c| c as f64 / k as f64).collect());
            return;
        }
        for take in (0..=left).rev() {
            current[pos] = take;
            recurse(pos + 1, left - take, k, current, out);
        }
    }
    recurse(0, k, k, &mut current, &mut out);
    Ok(out)
}

/// Pareto frontier (maximize mean, minimize variance) over a long-only weight
/// grid, sorted by variance with strictly increasing mean.
pub fn markowitz_sweep(returns: &[Vec<f64>], grid_step: f64) -> Result<Vec<FrontierPoint>> {
    let (means, cov) = sample_moments(returns)?;
    let mut points: Vec<FrontierPoint> = weight_grid(returns.len(), grid_step)?
        .into_iter()
        .map(|w| {
            let (mean, variance) = quadratic(&w, &means, &cov);
            FrontierPoint { weights: w, mean, variance }
        })
        .collect();
    points.sort_by(|a, b| a.variance.total_cmp(&b.variance).then(b.mean.total_cmp(&a.mean)));
    let mut frontier: Vec<FrontierPoint> = Vec::new();
    for p in points {
        if frontier.last().is_none_or(|last| p.mean > last.mean) {
            frontier.push(p);
        }
    }
    Ok(frontier)
}

/// Excess mean return over its population standard deviation.
///
/// With no spread the ratio is `0` when the excess mean is also zero, and
/// `±SHARPE_CAP` otherwise.
pub fn sharpe_ratio(returns: &[f64], y_f: f64) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: returns.len(),
        });
    }
    let excess = mean(returns) - y_f;
    let sd = population_std(returns);
    if sd < 1e-12 {
        if excess.abs() < 1e-12 {
            return Ok(0.0);
        }
        return Ok(SHARPE_CAP.copysign(excess));
    }
    Ok(excess / sd)
}

/// Daily objective for a planned three-day value path `[V_i, .., V_{i+3}]`.
///
/// `sigma` is the risk assessment of the plan in value units.
pub fn objective(personality: Personality, trajectory: &[f64; 4], sigma: f64, params: &RiskParams) -> Result<f64> {
    if trajectory.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("trajectory must be positive: {trajectory:?}")));
    }
    Ok(match personality {
        Personality::Crazy => trajectory[3],
        Personality::Stable => {
            let r = [
                trajectory[1] / trajectory[0] - 1.0,
                trajectory[2] / trajectory[1] - 1.0,
                trajectory[3] / trajectory[2] - 1.0,
            ];
            sharpe_ratio(&r, params.y_f)?
        }
        Personality::Middle => (trajectory[3] - trajectory[0]) - params.golden * sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RiskParams {
        RiskParams::default()
    }

    #[test]
    fn cash_only_portfolio_has_no_risk() {
        let r = vec![vec![0.0; 5], vec![0.01, -0.02, 0.03, 0.0, 0.01], vec![0.1, -0.1, 0.05, 0.0, 0.02]];
        let w = AllocationWeights::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(portfolio_moments(&r, &w).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn perfectly_correlated_assets() {
        let a = vec![0.01, -0.02, 0.03, 0.0, 0.015];
        let b: Vec<f64> = a.iter().map(|v| 3.0 * v + 0.001).collect();
        let s1 = covariance(&a, &a).sqrt();
        let s2 = covariance(&b, &b).sqrt();
        let w = AllocationWeights::new(vec![0.5, 0.5]).unwrap();
        let (_, var) = portfolio_moments(&[a, b], &w).unwrap();
        assert!((var - ((s1 + s2) / 2.0).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn uncorrelated_assets() {
        // Orthogonal centred samples.
        let a = vec![1.0, -1.0, 1.0, -1.0];
        let b = vec![1.0, 1.0, -1.0, -1.0];
        let c = vec![0.5, 0.2, -0.1, 0.3];
        let v1 = covariance(&a, &a);
        let v2 = covariance(&b, &b);
        let w = AllocationWeights::new(vec![0.5, 0.5, 0.0]).unwrap();
        let (_, var) = portfolio_moments(&[a, b, c], &w).unwrap();
        assert!((var - (0.25 * v1 + 0.25 * v2)).abs() < 1e-15);
    }

    #[test]
    fn coarse_grid_has_six_points() {
        let g = weight_grid(3, 0.5).unwrap();
        assert_eq!(g.len(), 6);
        assert!(g.iter().all(|w| (w.iter().sum::<f64>() - 1.0).abs() < 1e-12));
        assert!(weight_grid(3, 0.0).is_err());
        assert!(weight_grid(3, 0.6).is_err());
    }

    #[test]
    fn dominant_asset_collapses_the_frontier() {
        // Asset 0 has the higher mean and the lower variance; asset 1 is
        // independent of it.
        let a = vec![0.02, 0.021, 0.019, 0.02];
        let b = vec![0.05, -0.05, -0.05, 0.05];
        let f = markowitz_sweep(&[a, b], 0.1).unwrap();
        let top = f.last().unwrap();
        assert_eq!(top.weights, vec![1.0, 0.0]);
        assert!(f.iter().all(|p| p.weights[0] >= 0.5));
    }

    #[test]
    fn frontier_is_sorted_and_nondominated() {
        let r = vec![
            vec![0.0; 6],
            vec![0.01, -0.005, 0.012, 0.002, -0.001, 0.004],
            vec![0.05, -0.04, 0.08, -0.02, 0.03, 0.01],
        ];
        let f = markowitz_sweep(&r, 0.05).unwrap();
        for w in f.windows(2) {
            assert!(w[1].variance >= w[0].variance);
            assert!(w[1].mean > w[0].mean);
        }
    }

    #[test]
    fn sharpe_examples() {
        assert_eq!(sharpe_ratio(&[0.01, 0.01, 0.01], 0.01).unwrap(), 0.0);
        assert!((sharpe_ratio(&[0.02, 0.0], 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sharpe_ratio(&[0.02, 0.02], 0.0).unwrap(), SHARPE_CAP);
        assert_eq!(sharpe_ratio(&[-0.02, -0.02], 0.0).unwrap(), -SHARPE_CAP);
        assert!(sharpe_ratio(&[0.1], 0.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let flat = [100.0; 4];
        assert_eq!(objective(Personality::Crazy, &flat, 5.0, &params()).unwrap(), 100.0);
        let m = objective(Personality::Middle, &flat, 2.0, &params()).unwrap();
        assert!((m + 1.236).abs() < 1e-12);
        let s = objective(Personality::Stable, &[100.0, 101.0, 102.0, 103.0], 0.0, &params()).unwrap();
        // Population-std Sharpe of the three daily returns.
        assert!((s - 123.693_169_032_667_74).abs() < 1e-6, "{s}");
        assert!(objective(Personality::Crazy, &[100.0, 0.0, 1.0, 1.0], 0.0, &params()).is_err());
    }

    #[test]
    fn personality_parsing() {
        assert_eq!("Crazy".parse::<Personality>().unwrap(), Personality::Crazy);
        assert!("bold".parse::<Personality>().is_err());
    }
}
