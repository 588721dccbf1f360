//! Choosing how many trailing days the forecaster is fitted on.

use serde::Serialize;

use super::arima::{fit, fit_r_squared, ArimaSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowChoice {
    /// Window length in days.
    pub t: usize,
    pub r2: f64,
}

/// In-sample R² of a fit on the last `t` values of `series`.
pub fn window_r2(series: &[f64], spec: ArimaSpec, t: usize) -> Result<f64> {
    if t > series.len() {
        return Err(Error::InsufficientData {
            needed: t,
            available: series.len(),
        });
    }
    let window = &series[series.len() - t..];
    let f = fit(window, spec)?;
    fit_r_squared(window, &f)
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Number of trailing end positions considered.
    pub span: usize,
    pub stride: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { span: 200, stride: 5 }
    }
}

pub fn default_candidates() -> Vec<usize> {
    (20..=120).step_by(10).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowScan {
    pub choice: WindowChoice,
    /// `(T, worst R² over positions)` for every candidate that could be scored.
    pub scores: Vec<(usize, f64)>,
}

/// Scores each candidate length by its worst in-sample R² over end positions
/// in the trailing evaluation span, and picks the length whose worst case is
/// best.
pub fn optimal_window(
    series: &[f64],
    spec: ArimaSpec,
    candidates: &[usize],
    opts: &ScanOptions,
) -> Result<WindowScan> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no window candidates".into()));
    }
    let n = series.len();
    let stride = opts.stride.max(1);
    let mut scores = Vec::new();
    for &t in candidates {
        if t < spec.min_sample() || t + opts.span > n {
            continue;
        }
        let worst = (0..opts.span)
            .step_by(stride)
            .filter_map(|back| {
                let end = n - back;
                window_r2(&series[..end], spec, t).ok()
            })
            .fold(None, |acc: Option<f64>, r2| Some(acc.map_or(r2, |a| a.min(r2))));
        if let Some(worst) = worst {
            scores.push((t, worst));
        }
    }
    let best = scores
        .iter()
        .copied()
        .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
            Some(a) if a.1 >= cur.1 => Some(a),
            _ => Some(cur),
        })
        .ok_or(Error::InsufficientData {
            needed: candidates.iter().min().copied().unwrap_or(0) + opts.span,
            available: n,
        })?;
    Ok(WindowScan {
        choice: WindowChoice { t: best.0, r2: best.1 },
        scores,
    })
}

/// Largest number of hill-climbing moves.
pub const ADAPTIVE_STEP_BUDGET: usize = 50;

/// Hill-climbs the window length from `t0`: compare `T-1`, `T`, `T+1` and move
/// to the strictly best neighbour until `T` is a local maximum or the step
/// budget is spent. `t0` is clamped into `[t_min, t_max]`. Lengths whose score
/// cannot be computed are skipped.
pub fn hill_climb<F>(mut r2_of: F, t0: usize, t_min: usize, t_max: usize) -> Result<WindowChoice>
where
    F: FnMut(usize) -> Option<f64>,
{
    if t_max < t_min {
        return Err(Error::InsufficientData {
            needed: t_min,
            available: t_max,
        });
    }
    let mut t = t0.clamp(t_min, t_max);
    let mut current = r2_of(t).ok_or_else(|| {
        Error::Numerical(format!("cannot score the starting window T={t}"))
    })?;
    for _ in 0..ADAPTIVE_STEP_BUDGET {
        let mut best = (t, current);
        for cand in [t.checked_sub(1), t.checked_add(1)].into_iter().flatten() {
            if cand < t_min || cand > t_max {
                continue;
            }
            if let Some(r2) = r2_of(cand) {
                if r2 > best.1 {
                    best = (cand, r2);
                }
            }
        }
        if best.0 == t {
            break;
        }
        (t, current) = best;
    }
    Ok(WindowChoice { t, r2: current })
}

/// Adaptive window on the tail of a price history, starting from `t0`.
pub fn adaptive_window(tail: &[f64], spec: ArimaSpec, t0: usize) -> Result<WindowChoice> {
    hill_climb(
        |t| window_r2(tail, spec, t).ok(),
        t0,
        spec.min_sample(),
        tail.len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn climbs_to_the_peak_of_a_unimodal_landscape() {
        let landscape = |t: usize| Some(1.0 - ((t as f64 - 57.0) / 40.0).powi(2));
        let c = hill_climb(landscape, 60, 13, 500).unwrap();
        assert_eq!(c.t, 57);
        assert_eq!(c.r2, 1.0);
    }

    #[test]
    fn flat_landscape_stays_put() {
        let c = hill_climb(|_| Some(0.8), 60, 13, 500).unwrap();
        assert_eq!(c.t, 60);
    }

    #[test]
    fn start_beyond_history_is_clamped() {
        let mut seen = Vec::new();
        let c = hill_climb(
            |t| {
                seen.push(t);
                Some(t as f64)
            },
            60,
            13,
            45,
        )
        .unwrap();
        assert_eq!(c.t, 45);
        assert!(seen.iter().all(|&t| t <= 45));
    }

    #[test]
    fn step_budget_bounds_the_climb() {
        let c = hill_climb(|t| Some(-(t as f64)), 100, 1, 1000).unwrap();
        assert_eq!(c.t, 100 - ADAPTIVE_STEP_BUDGET);
    }

    #[test]
    fn singleton_candidate_is_chosen() {
        let series: Vec<f64> = (0..300)
            .map(|i| 100.0 + (i as f64 * 0.37).sin() * 5.0 + i as f64 * 0.1)
            .collect();
        let scan = optimal_window(&series, ArimaSpec::default(), &[60], &ScanOptions::default()).unwrap();
        assert_eq!(scan.choice.t, 60);
        assert_eq!(scan.scores.len(), 1);
        assert_eq!(scan.scores[0].1, scan.choice.r2);
    }

    #[test]
    fn scan_needs_enough_history() {
        let series: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        assert!(optimal_window(&series, ArimaSpec::default(), &[60], &ScanOptions::default()).is_err());
    }
}
