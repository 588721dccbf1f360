use std::path::{Path, PathBuf};

use ctp_core::backtest::{self, MemoForecaster};
use ctp_core::forecaster::{self, ScanOptions};
use ctp_core::market_data::{self, Market};
use ctp_core::sensitivity::{self, PerturbationSpec};
use ctp_core::{Asset, BacktestConfig, Error, Personality, PriceSeries, Result, RunConfig, Strategy};

use crate::manifest::{absolute, RunManifest};
use crate::{
    AssetArg, Baseline, BacktestArgs, DataArgs, ForecastArgs, InterpolateArgs, Mode, PersonalityArg, RunArgs,
    SensitivityArgs,
};

const SEED_VAR: &str = "CTP_SEED";
const WHITE_NOISE_LAGS: usize = 10;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidArgument(format!("{SEED_VAR} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn load_config(data: &DataArgs) -> Result<Option<RunConfig>> {
    data.config.as_deref().map(RunConfig::load).transpose()
}

fn price_path(flag: &Option<PathBuf>, from_config: Option<&PathBuf>, name: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| from_config.cloned())
        .ok_or_else(|| Error::InvalidArgument(format!("no {name} price file: pass --{name} or set {name}_csv in --config")))
}

/// A fully resolved backtest: configuration after overrides plus its data.
struct Resolved {
    config: BacktestConfig,
    config_path: Option<PathBuf>,
    gold: PathBuf,
    btc: PathBuf,
    absolute_points: bool,
    market: Market,
}

fn resolve(run: &RunArgs) -> Result<Resolved> {
    let file = load_config(&run.data)?;
    let mut config = match (&file, run.start, run.end) {
        (Some(f), _, _) => f.backtest.clone(),
        (None, Some(s), Some(e)) => BacktestConfig::new(s, e),
        (None, _, _) => {
            return Err(Error::InvalidArgument(
                "give --config, or both --start and --end".into(),
            ))
        }
    };
    if let Some(s) = run.start {
        config.start_date = s;
    }
    if let Some(e) = run.end {
        config.end_date = e;
    }
    if let Some(p) = run.personality {
        config.risk.personality = match p {
            PersonalityArg::Crazy => Personality::Crazy,
            PersonalityArg::Stable => Personality::Stable,
            PersonalityArg::Middle => Personality::Middle,
        };
    }
    if let Some(seed) = run.seed.or(env_seed()?) {
        config.pso.seed = seed;
    }
    config.pso.parallel |= run.parallel;
    config.validate()?;
    let gold = price_path(&run.data.gold, file.as_ref().and_then(|f| f.gold_csv.as_ref()), "gold")?;
    let btc = price_path(&run.data.btc, file.as_ref().and_then(|f| f.btc_csv.as_ref()), "btc")?;
    let market = market_data::load_market(&gold, &btc)?;
    Ok(Resolved {
        config,
        config_path: run.data.config.as_deref().map(absolute),
        absolute_points: file.is_some_and(|f| f.absolute_points),
        market,
        gold,
        btc,
    })
}

fn manifest_for(name: &str, argv: &[String], out: &Path, r: &Resolved) -> RunManifest {
    let mut m = RunManifest::new(name, argv, out);
    m.config.clone_from(&r.config_path);
    m.inputs = vec![absolute(&r.gold), absolute(&r.btc)];
    m.seed = Some(r.config.pso.seed);
    m
}

pub fn interpolate(a: InterpolateArgs, argv: &[String]) -> Result<()> {
    let mut filled: Vec<(PathBuf, &str, PriceSeries)> = Vec::new();
    let sources = [(Some(a.gold.clone()), Asset::Gold, "gold_filled.csv"), (a.btc.clone(), Asset::Bitcoin, "btc_filled.csv")];
    for (path, asset, name) in sources {
        let Some(path) = path else { continue };
        let loaded = market_data::load_price_csv(&path, asset)?;
        let series = market_data::hermite_fill(&loaded.series)?;
        println!(
            "{asset}: {} observed, {} filled, {} blank rows dropped",
            series.observed_count(),
            series.len() - series.observed_count(),
            loaded.dropped_rows
        );
        filled.push((path, name, series));
    }
    // Nothing is written until every input has loaded.
    create_dir(&a.out)?;
    let mut m = RunManifest::new("interpolate", argv, &a.out);
    for (path, name, series) in &filled {
        series.write_csv(a.out.join(name))?;
        m.inputs.push(absolute(path));
    }
    m.write()
}

enum WindowArg {
    Fixed(usize),
    Adaptive(usize),
    Optimal,
}

fn parse_window(parts: &[String]) -> Result<WindowArg> {
    let (kind, days) = match parts {
        [one] => match one.split_once(':') {
            Some((k, d)) => (k, Some(d)),
            None => (one.as_str(), None),
        },
        [k, d] => (k.as_str(), Some(d.as_str())),
        _ => return Err(Error::InvalidArgument("--window takes a kind and an optional length".into())),
    };
    let days = days
        .map(|d| d.parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad window length {d:?}"))))
        .transpose()?;
    match (kind, days) {
        ("fixed", Some(t)) => Ok(WindowArg::Fixed(t)),
        ("fixed", None) => Err(Error::InvalidArgument("--window fixed needs a length".into())),
        ("adaptive", t) => Ok(WindowArg::Adaptive(t.unwrap_or(forecaster::DEFAULT_WINDOW))),
        ("optimal", None) => Ok(WindowArg::Optimal),
        _ => Err(Error::InvalidArgument(format!(
            "--window must be `fixed N`, `adaptive [T0]` or `optimal`, got {parts:?}"
        ))),
    }
}

pub fn forecast(a: ForecastArgs, argv: &[String]) -> Result<()> {
    let window = parse_window(&a.window)?;
    let file = load_config(&a.data)?;
    let spec = file.as_ref().map(|f| f.backtest.spec).unwrap_or_default();
    let (asset, path) = match a.asset {
        AssetArg::Gold => (Asset::Gold, price_path(&a.data.gold, file.as_ref().and_then(|f| f.gold_csv.as_ref()), "gold")?),
        AssetArg::Bitcoin => (Asset::Bitcoin, price_path(&a.data.btc, file.as_ref().and_then(|f| f.btc_csv.as_ref()), "btc")?),
    };
    let series = market_data::hermite_fill(&market_data::load_price_csv(&path, asset)?.series)?;
    let idx = series.index_of(a.date).ok_or_else(|| {
        Error::Data(format!(
            "{} is outside the {asset} history ({} .. {})",
            a.date,
            series.first_date().map_or("?".into(), |d| d.to_string()),
            series.last_date().map_or("?".into(), |d| d.to_string())
        ))
    })?;
    let prices = series.prices();
    let history = &prices[..=idx];
    let dates = series.dates();

    let mut scan = None;
    let choice = match window {
        WindowArg::Fixed(t) => forecaster::WindowChoice {
            t,
            r2: forecaster::window_r2(history, spec, t)?,
        },
        WindowArg::Adaptive(t0) => forecaster::adaptive_window(history, spec, t0)?,
        WindowArg::Optimal => {
            let s = forecaster::optimal_window(history, spec, &forecaster::default_candidates(), &ScanOptions::default())?;
            let c = s.choice;
            scan = Some(s);
            c
        }
    };
    let start = history.len() - choice.t;
    let tail = &history[start..];
    let fit = forecaster::fit(tail, spec)?;
    let fc = forecaster::forecast(&fit, tail, forecaster::HORIZON)?;
    let lags = WHITE_NOISE_LAGS.min(fit.residuals.len().saturating_sub(1)).max(spec.p + spec.q + 1);
    let wn = forecaster::white_noise_check(&fit.residuals, lags, spec.p + spec.q)?;

    println!("asset: {asset}");
    println!("date: {}", a.date);
    println!("window: {} days (R² {:.6})", choice.t, choice.r2);
    println!(
        "forecast: {}",
        fc.points.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(" ")
    );
    println!("sigma: {:.4}", fc.sigma);
    println!(
        "white noise: {} (Ljung-Box Q = {:.4}, p = {:.4}, {} lags)",
        if wn.pass { "pass" } else { "fail" },
        wn.q_stat,
        wn.p_value,
        wn.lags
    );

    if a.diagnostics {
        create_dir(&a.out)?;
        let max_lag = 20.min(fit.differenced.len().saturating_sub(1));
        write_correlogram(&a.out.join("acf_pacf.csv"), &fit.differenced, max_lag)?;
        let rmax = 20.min(fit.residuals.len().saturating_sub(1));
        write_correlogram(&a.out.join("residual_acf_pacf.csv"), &fit.residuals, rmax)?;
        let first = start + fit.first_fitted_index();
        let mut w = csv_writer(&a.out.join("fit.csv"))?;
        write_row(&mut w, &["date", "actual", "fitted", "residual"])?;
        for (k, (f, r)) in fit.fitted.iter().zip(&fit.residuals).enumerate() {
            let i = first + k;
            write_row(&mut w, &[dates[i].to_string(), prices[i].to_string(), f.to_string(), r.to_string()])?;
        }
        flush(w)?;
        if let Some(scan) = &scan {
            let mut w = csv_writer(&a.out.join("window_scan.csv"))?;
            write_row(&mut w, &["T", "r2_min"])?;
            for (t, r2) in &scan.scores {
                write_row(&mut w, &[t.to_string(), r2.to_string()])?;
            }
            flush(w)?;
        }
        let mut m = RunManifest::new("forecast", argv, &a.out);
        m.config = a.data.config.as_deref().map(absolute);
        m.inputs = vec![absolute(&path)];
        m.write()?;
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn write_row<S: AsRef<[u8]>>(w: &mut csv::Writer<std::fs::File>, cells: &[S]) -> Result<()> {
    Ok(w.write_record(cells)?)
}

fn flush(mut w: csv::Writer<std::fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

fn write_correlogram(path: &Path, series: &[f64], max_lag: usize) -> Result<()> {
    let acf = forecaster::acf(series, max_lag)?;
    let pacf = forecaster::pacf(series, max_lag)?;
    let mut w = csv_writer(path)?;
    write_row(&mut w, &["lag", "acf", "pacf"])?;
    for (lag, (a, p)) in acf.iter().zip(&pacf).enumerate() {
        write_row(&mut w, &[lag.to_string(), a.to_string(), p.to_string()])?;
    }
    flush(w)
}

fn strategy(b: Baseline) -> Strategy {
    match b {
        Baseline::Pso => Strategy::Pso,
        Baseline::Markowitz => Strategy::Markowitz,
    }
}

pub fn backtest(a: BacktestArgs, argv: &[String]) -> Result<()> {
    let r = resolve(&a.run)?;
    let report = match strategy(a.run.baseline) {
        Strategy::Pso => backtest::run(&r.market, &r.config)?,
        Strategy::Markowitz => backtest::run_markowitz(&r.market, &r.config)?,
    };
    create_dir(&a.out)?;
    backtest::write_report_csv(&report, a.out.join("report.csv"))?;
    backtest::write_summary_json(&report, a.out.join("summary.json"))?;
    manifest_for("backtest", argv, &a.out, &r).write()?;
    let held = report.records.iter().filter(|d| d.fallback).count();
    println!(
        "{} {} {} .. {}: {} days, {} held for lack of a forecast",
        report.strategy,
        report.personality,
        r.config.start_date,
        r.config.end_date,
        report.records.len(),
        held
    );
    println!("final value: {:.2}", report.final_value);
    Ok(())
}

pub fn sensitivity(a: SensitivityArgs, argv: &[String]) -> Result<()> {
    match a.mode {
        Mode::Scheme => scheme(a, argv),
        Mode::Params => params(a, argv),
    }
}

fn scheme(a: SensitivityArgs, argv: &[String]) -> Result<()> {
    let Some(dir) = a.report.as_deref() else {
        return Err(Error::InvalidArgument("--mode scheme needs --report <backtest output dir>".into()));
    };
    let mut spec = PerturbationSpec {
        rel_lo: a.rel_lo,
        rel_hi: a.rel_hi,
        trials: a.trials,
        seed: 0,
    };
    spec.validate()?;
    let summary = backtest::read_summary_json(dir.join("summary.json"))?;
    let report = summary.into_report(backtest::read_report_csv(dir.join("report.csv"))?)?;
    spec.seed = a.run.seed.or(env_seed()?).unwrap_or(report.seed);

    let file = load_config(&a.run.data)?;
    let recorded = crate::manifest::RunManifest::read(dir).ok();
    let from_manifest = |k: usize| recorded.as_ref().and_then(|m| m.inputs.get(k).cloned());
    let gold = a.run.data.gold.clone().or(file.as_ref().and_then(|f| f.gold_csv.clone())).or(from_manifest(0));
    let btc = a.run.data.btc.clone().or(file.as_ref().and_then(|f| f.btc_csv.clone())).or(from_manifest(1));
    let (Some(gold), Some(btc)) = (gold, btc) else {
        return Err(Error::InvalidArgument(
            "cannot find the report's price files; pass --gold and --btc".into(),
        ));
    };
    let market = market_data::load_market(&gold, &btc)?;
    let outcome = sensitivity::perturb_schedule(&report, &market, &spec)?;

    create_dir(&a.out)?;
    sensitivity::write_trials_csv(&outcome, a.out.join("perturbation.csv"))?;
    let mut m = RunManifest::new("sensitivity", argv, &a.out);
    m.inputs = vec![absolute(&gold), absolute(&btc), absolute(dir)];
    m.seed = Some(spec.seed);
    m.write()?;
    println!(
        "baseline final value {:.4}, objective {:.6}",
        outcome.baseline_final_value, outcome.baseline_objective
    );
    let done: Vec<_> = outcome.trials.iter().filter(|t| !t.aborted).collect();
    let (lo, hi) = done.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
        (lo.min(t.final_value), hi.max(t.final_value))
    });
    println!(
        "{} trials ({} aborted): final value {:.4} .. {:.4}, {:.0}% beat the baseline objective",
        outcome.trials.len(),
        outcome.trials.len() - done.len(),
        lo,
        hi,
        100.0 * outcome.beat_fraction()
    );
    Ok(())
}

fn params(a: SensitivityArgs, argv: &[String]) -> Result<()> {
    let r = resolve(&a.run)?;
    let forecaster = MemoForecaster::new(r.config.arima_forecaster());
    let rows = sensitivity::parameter_sensitivity(
        &r.config,
        &r.market,
        &forecaster,
        strategy(a.run.baseline),
        a.absolute_points || r.absolute_points,
    )?;
    create_dir(&a.out)?;
    sensitivity::write_rows_csv(&rows, a.out.join("sensitivity.csv"))?;
    manifest_for("sensitivity", argv, &a.out, &r).write()?;
    for row in &rows {
        println!("{:>9}  {:.4}", row.label, row.final_value);
    }
    Ok(())
}
