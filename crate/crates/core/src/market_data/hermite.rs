//! Piecewise cubic Hermite interpolation with shape-preserving slopes.
//!
//! Knot derivatives come from local four-point cubic stencils, which makes the
//! interpolant exact for data sampled from any polynomial of degree three or
//! less. On stretches where the data is strictly monotone the slopes are then
//! pulled into the Fritsch–Carlson monotonicity region, so the interpolant never
//! overshoots the bracketing knots there. At local extrema of the data the
//! stencil slope is kept as is.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HermiteSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteSpline {
    /// Builds the interpolant. `xs` must be strictly increasing and at least
    /// three knots are required.
    pub fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidArgument(format!(
                "knot arrays differ in length ({} vs {})",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 3 {
            return Err(Error::InsufficientData {
                needed: 3,
                available: xs.len(),
            });
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "knot abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite knot".into()));
        }
        let slopes = shape_preserving_slopes(xs, ys);
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            slopes,
        })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.xs, &self.ys)
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Interval index `k` with `xs[k] <= x <= xs[k+1]`, clamped to the ends.
    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    /// Evaluates the interpolant. Outside the knot range the end cubic is
    /// extended.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.interval(x);
        if x == self.xs[k] {
            return self.ys[k];
        }
        if x == self.xs[k + 1] {
            return self.ys[k + 1];
        }
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k]
            + h10 * h * self.slopes[k]
            + h01 * self.ys[k + 1]
            + h11 * h * self.slopes[k + 1]
    }

    /// First derivative of the interpolant.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let k = self.interval(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.ys[k] + d10 * self.slopes[k] + d01 * self.ys[k + 1] + d11 * self.slopes[k + 1]
    }
}

/// Derivative at `at` of the Lagrange polynomial through the given knots.
fn lagrange_derivative(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    let n = xs.len();
    let mut total = 0.0;
    for j in 0..n {
        // d/dx of the j-th basis polynomial, evaluated at `at`.
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        let mut numer = 0.0;
        for skip in 0..n {
            if skip == j {
                continue;
            }
            let mut prod = 1.0;
            for (m, x) in xs.iter().enumerate() {
                if m != j && m != skip {
                    prod *= at - x;
                }
            }
            numer += prod;
        }
        total += ys[j] * numer / denom;
    }
    total
}

fn stencil_slope(xs: &[f64], ys: &[f64], k: usize) -> f64 {
    let n = xs.len();
    if n == 3 {
        return lagrange_derivative(xs, ys, xs[k]);
    }
    // Interior knots average the four-point windows that have k strictly
    // inside; the end knots use the one-sided window.
    let containing = k.saturating_sub(3)..=k.min(n - 4);
    let mut windows: Vec<usize> = containing.clone().filter(|&s| s < k && k < s + 3).collect();
    if windows.is_empty() {
        windows = containing.collect();
    }
    let sum: f64 = windows
        .iter()
        .map(|&s| lagrange_derivative(&xs[s..s + 4], &ys[s..s + 4], xs[k]))
        .sum();
    sum / windows.len() as f64
}

fn shape_preserving_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut d: Vec<f64> = (0..n).map(|k| stencil_slope(xs, ys, k)).collect();
    let secants: Vec<f64> = (0..n - 1)
        .map(|k| (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]))
        .collect();

    let same_sign = |a: f64, b: f64| a * b > 0.0;
    let monotone: Vec<usize> = (0..n - 1)
        .filter(|&k| {
            let s = secants[k];
            s != 0.0
                && (k == 0 || same_sign(secants[k - 1], s))
                && (k + 2 == n || same_sign(secants[k + 1], s))
        })
        .collect();
    // Slopes at knots inside a monotone stretch must share the secant sign.
    for &k in &monotone {
        let s = secants[k];
        if d[k] * s < 0.0 {
            d[k] = 0.0;
        }
        if d[k + 1] * s < 0.0 {
            d[k + 1] = 0.0;
        }
    }
    // The region is not closed under shrinking one slope, so fixing one
    // interval can break its neighbour. Rescaled pairs land on the radius-3
    // circle, which shrinking cannot leave, so this settles within n passes.
    for _ in 0..n {
        let mut changed = false;
        for &k in &monotone {
            let s = secants[k];
            let a = d[k] / s;
            let b = d[k + 1] / s;
            if !in_monotone_region(a, b) {
                let tau = 3.0 / (a * a + b * b).sqrt();
                d[k] = tau * a * s;
                d[k + 1] = tau * b * s;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    d
}

/// Fritsch–Carlson necessary and sufficient condition for a Hermite cubic with
/// normalized end slopes `a`, `b` (both non-negative) to be monotone.
fn in_monotone_region(a: f64, b: f64) -> bool {
    const EPS: f64 = 1e-12;
    if a + b - 2.0 <= EPS || 2.0 * a + b - 3.0 <= EPS || a + 2.0 * b - 3.0 <= EPS {
        return true;
    }
    let phi = a - (2.0 * a + b - 3.0).powi(2) / (3.0 * (a + b - 2.0));
    phi >= -EPS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passes_through_knots() {
        let xs = [0.0, 1.0, 2.0, 5.0, 6.0];
        let ys = [3.0, 4.5, 4.0, 7.0, 1.0];
        let s = HermiteSpline::new(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert_eq!(s.eval(*x), y);
        }
    }

    #[test]
    fn reproduces_a_line_across_a_gap() {
        let xs = [0.0, 1.0, 2.0, 5.0, 6.0];
        let ys: Vec<f64> = xs.iter().map(|t| 2.0 * t + 5.0).collect();
        let s = HermiteSpline::new(&xs, &ys).unwrap();
        assert!((s.eval(3.0) - 11.0).abs() < 1e-12);
        assert!((s.eval(4.0) - 13.0).abs() < 1e-12);
    }

    #[test]
    fn reproduces_a_cubic() {
        let f = |t: f64| 0.01 * t * t * t - 0.3 * t * t + 2.0 * t + 100.0;
        let xs = [0.0, 1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 11.0, 12.0];
        let ys: Vec<f64> = xs.iter().map(|&t| f(t)).collect();
        let s = HermiteSpline::new(&xs, &ys).unwrap();
        for i in 0..=120 {
            let t = i as f64 * 0.1;
            assert!((s.eval(t) - f(t)).abs() < 1e-9 * f(t).abs(), "t={t}");
        }
    }

    #[test]
    fn steep_monotone_step_does_not_overshoot() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 7.0, 8.0];
        let ys = [1.0, 1.001, 1.002, 1.003, 10.0, 10.001, 10.002];
        let s = HermiteSpline::new(&xs, &ys).unwrap();
        for i in 0..=80 {
            let t = i as f64 * 0.1;
            let k = s.interval(t);
            let (lo, hi) = (ys[k].min(ys[k + 1]), ys[k].max(ys[k + 1]));
            let v = s.eval(t);
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "t={t} v={v}");
        }
    }

    #[test]
    fn rejects_too_few_or_unsorted_knots() {
        assert!(HermiteSpline::new(&[0.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(HermiteSpline::new(&[0.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn monotone_region_membership() {
        assert!(in_monotone_region(1.0, 1.0));
        assert!(in_monotone_region(3.0, 0.0));
        assert!(!in_monotone_region(4.0, 4.0));
    }
}
