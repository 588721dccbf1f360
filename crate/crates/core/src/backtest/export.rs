use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::portfolio::{PortfolioState, TradeDecision};
use crate::risk::Personality;

use super::{BacktestConfig, BacktestReport, DailyRecord, Strategy, PLAN_DIM};

const HEADER: [&str; 22] = [
    "date",
    "c",
    "g",
    "b",
    "V",
    "x",
    "y",
    "gold_forecast_1",
    "gold_forecast_2",
    "gold_forecast_3",
    "btc_forecast_1",
    "btc_forecast_2",
    "btc_forecast_3",
    "v_next",
    "gold_sigma",
    "btc_sigma",
    "objective",
    "fallback",
    "plan_x2",
    "plan_y2",
    "plan_x3",
    "plan_y3",
];

/// Writes one row per decision day. Floats are written in shortest
/// round-trip form, so re-reading reproduces every value exactly.
pub fn write_report_csv(report: &BacktestReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in &report.records {
        let mut row = vec![r.date.to_string()];
        let nums = [r.state.c, r.state.g, r.state.b, r.state.value, r.decision.x, r.decision.y]
            .into_iter()
            .chain(r.gold_forecast)
            .chain(r.btc_forecast)
            .chain([r.value_next, r.gold_sigma, r.btc_sigma, r.objective]);
        row.extend(nums.map(|v| v.to_string()));
        row.push(u8::from(r.fallback).to_string());
        row.extend(r.plan[2..].iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads rows written by [`write_report_csv`].
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<DailyRecord>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Data(format!("{} is not a report file", path.display())));
    }
    let mut out = Vec::new();
    for (k, row) in r.records().enumerate() {
        let line = k + 2;
        let row = row?;
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d").map_err(|_| Error::BadDate {
            line,
            value: row[0].to_string(),
        })?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse::<f64>().map_err(|_| Error::BadPrice {
                line,
                value: row[i].to_string(),
            })
        };
        let mut plan = [0.0; PLAN_DIM];
        plan[0] = num(5)?;
        plan[1] = num(6)?;
        for (j, p) in plan[2..].iter_mut().enumerate() {
            *p = num(18 + j)?;
        }
        out.push(DailyRecord {
            date,
            state: PortfolioState {
                c: num(1)?,
                g: num(2)?,
                b: num(3)?,
                value: num(4)?,
            },
            decision: TradeDecision::new(plan[0], plan[1]),
            gold_forecast: [num(7)?, num(8)?, num(9)?],
            btc_forecast: [num(10)?, num(11)?, num(12)?],
            value_next: num(13)?,
            gold_sigma: num(14)?,
            btc_sigma: num(15)?,
            objective: num(16)?,
            fallback: &row[17] == "1",
            plan,
        });
    }
    Ok(out)
}

/// Run-level facts stored next to the per-day CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub strategy: Strategy,
    pub personality: Personality,
    pub seed: u64,
    pub days: usize,
    pub final_value: f64,
    pub config: BacktestConfig,
}

impl ReportSummary {
    pub fn of(report: &BacktestReport) -> Self {
        Self {
            strategy: report.strategy,
            personality: report.personality,
            seed: report.seed,
            days: report.records.len(),
            final_value: report.final_value,
            config: report.config.clone(),
        }
    }

    /// Reassembles a report from its summary and re-read records.
    pub fn into_report(self, records: Vec<DailyRecord>) -> Result<BacktestReport> {
        if records.len() != self.days {
            return Err(Error::Data(format!(
                "summary lists {} days but the report has {}",
                self.days,
                records.len()
            )));
        }
        Ok(BacktestReport {
            strategy: self.strategy,
            personality: self.personality,
            seed: self.seed,
            config: self.config,
            records,
            final_value: self.final_value,
        })
    }
}

pub fn write_summary_json(report: &BacktestReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&ReportSummary::of(report))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary_json(path: impl AsRef<Path>) -> Result<ReportSummary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
