//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected so a
//! typo never silently falls back to a default.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `gold_csv`, `btc_csv` | price files, relative to the config file | none |
//! | `start_date`, `end_date` | first decision day and valuation day (ISO) | none |
//! | `initial_cash` | starting USD | 1000 |
//! | `alpha`, `beta` | gold and bitcoin commission rates | 0.01, 0.02 |
//! | `symmetric_commissions` | charge commission on sales too | true |
//! | `delta` | minimum cash fraction | 0 |
//! | `risk_free` | daily risk-free return | 0 |
//! | `golden` | middle-personality risk weight | 0.618 |
//! | `personality` | crazy, stable or middle | middle |
//! | `window` | `adaptive:T0` or `fixed:T` | adaptive:60 |
//! | `arima_p`, `arima_d`, `arima_q` | model order | 1, 1, 1 |
//! | `seed` | swarm seed | 0 |
//! | `pso_particles`, `pso_iters` | swarm size and iterations | 100, 200 |
//! | `pso_omega_start`, `pso_omega_end` | inertia schedule | 0.9, 0.4 |
//! | `pso_c1`, `pso_c2` | acceleration weights | 2, 2 |
//! | `pso_v_max_fraction` | velocity cap over box width | 0.5 |
//! | `parallel` | evaluate on all cores | false |
//! | `markowitz_lookback`, `markowitz_lambda`, `markowitz_grid` | baseline settings | 60, 1, 0.05 |
//! | `absolute_points` | sensitivity nudges rates by points, not relatively | false |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::backtest::{BacktestConfig, WindowPolicy};
use crate::error::{Error, Result};
use crate::portfolio::CommissionMode;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gold_csv: Option<PathBuf>,
    pub btc_csv: Option<PathBuf>,
    pub backtest: BacktestConfig,
    pub absolute_points: bool,
}

const KEYS: &[&str] = &[
    "gold_csv",
    "btc_csv",
    "start_date",
    "end_date",
    "initial_cash",
    "alpha",
    "beta",
    "symmetric_commissions",
    "delta",
    "risk_free",
    "golden",
    "personality",
    "window",
    "arima_p",
    "arima_d",
    "arima_q",
    "seed",
    "pso_particles",
    "pso_iters",
    "pso_omega_start",
    "pso_omega_end",
    "pso_c1",
    "pso_c2",
    "pso_v_max_fraction",
    "parallel",
    "markowitz_lookback",
    "markowitz_lambda",
    "markowitz_grid",
    "absolute_points",
];

/// Raw key/value pairs, keeping the line each key came from.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key = value, got {raw:?}", n + 1)));
        };
        let k = k.trim().to_string();
        if !KEYS.contains(&k.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key {k:?}", n + 1)));
        }
        if out.insert(k.clone(), (n + 1, v.trim().to_string())).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {k:?}", n + 1)));
        }
    }
    Ok(out)
}

pub fn parse_window(s: &str) -> Result<WindowPolicy> {
    let (kind, days) = s.split_once(':').unwrap_or((s, "60"));
    let days: usize = days
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad window length in {s:?}")))?;
    match kind.trim() {
        "adaptive" => Ok(WindowPolicy::Adaptive(days)),
        "fixed" => Ok(WindowPolicy::Fixed(days)),
        other => Err(Error::Config(format!("window must be adaptive[:T0] or fixed:T, got {other:?}"))),
    }
}

fn value<T: FromStr>(pairs: &BTreeMap<String, (usize, String)>, key: &str) -> Result<Option<T>> {
    match pairs.get(key) {
        None => Ok(None),
        Some((line, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("line {line}: cannot parse {key} = {v:?}"))),
    }
}

impl RunConfig {
    /// Parses config text. Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let p = parse_pairs(text)?;
        let date = |key: &str| -> Result<NaiveDate> {
            let (line, v) = p
                .get(key)
                .ok_or_else(|| Error::Config(format!("missing required key {key}")))?;
            NaiveDate::parse_from_str(v, "%Y-%m-%d")
                .map_err(|_| Error::Config(format!("line {line}: {key} must be YYYY-MM-DD, got {v:?}")))
        };
        let mut c = BacktestConfig::new(date("start_date")?, date("end_date")?);
        macro_rules! set {
            ($key:literal, $field:expr) => {
                if let Some(v) = value(&p, $key)? {
                    $field = v;
                }
            };
        }
        set!("initial_cash", c.initial_cash);
        set!("alpha", c.rates.alpha);
        set!("beta", c.rates.beta);
        if let Some(sym) = value::<bool>(&p, "symmetric_commissions")? {
            c.rates.mode = if sym { CommissionMode::Symmetric } else { CommissionMode::Literal };
        }
        set!("delta", c.risk.delta);
        set!("risk_free", c.risk.y_f);
        set!("golden", c.risk.golden);
        if let Some((line, v)) = p.get("personality") {
            c.risk.personality = v.parse().map_err(|e| Error::Config(format!("line {line}: {e}")))?;
        }
        if let Some((_, v)) = p.get("window") {
            c.window = parse_window(v)?;
        }
        set!("arima_p", c.spec.p);
        set!("arima_d", c.spec.d);
        set!("arima_q", c.spec.q);
        set!("seed", c.pso.seed);
        set!("pso_particles", c.pso.n_particles);
        set!("pso_iters", c.pso.max_iters);
        set!("pso_omega_start", c.pso.omega_start);
        set!("pso_omega_end", c.pso.omega_end);
        set!("pso_c1", c.pso.c1);
        set!("pso_c2", c.pso.c2);
        set!("pso_v_max_fraction", c.pso.v_max_fraction);
        set!("parallel", c.pso.parallel);
        set!("markowitz_lookback", c.markowitz.lookback);
        set!("markowitz_lambda", c.markowitz.lambda);
        set!("markowitz_grid", c.markowitz.grid_step);
        c.validate().map_err(|e| Error::Config(e.to_string()))?;
        let path = |key: &str| p.get(key).map(|(_, v)| base.join(v));
        Ok(Self {
            gold_csv: path("gold_csv"),
            btc_csv: path("btc_csv"),
            absolute_points: value(&p, "absolute_points")?.unwrap_or(false),
            backtest: c,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}
