//! Daily gold and bitcoin price series: loading, gap filling and the trading
//! calendar that decides when gold may be traded.

mod hermite;

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::Days;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use hermite::HermiteSpline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Asset {
    Gold,
    Bitcoin,
}

impl fmt::Display for Asset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Asset::Gold => "gold",
            Asset::Bitcoin => "bitcoin",
        })
    }
}

impl FromStr for Asset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gold" => Ok(Asset::Gold),
            "bitcoin" | "btc" => Ok(Asset::Bitcoin),
            other => Err(Error::InvalidArgument(format!("unknown asset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Observed,
    Interpolated,
}

impl Source {
    fn as_str(self) -> &'static str {
        match self {
            Source::Observed => "observed",
            Source::Interpolated => "interpolated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub date: NaiveDate,
    /// USD per troy ounce (gold) or per coin (bitcoin).
    pub price: f64,
    pub source: Source,
}

/// Dated prices for one asset, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    asset: Asset,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Builds a series from points, sorting by date. Duplicate dates and
    /// non-positive prices are rejected.
    pub fn new(asset: Asset, mut points: Vec<PricePoint>) -> Result<Self> {
        points.sort_by_key(|p| p.date);
        if let Some(w) = points.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Data(format!("duplicate date {}", w[0].date)));
        }
        if let Some(p) = points.iter().find(|p| !(p.price > 0.0 && p.price.is_finite())) {
            return Err(Error::Data(format!(
                "non-positive price {} on {}",
                p.price, p.date
            )));
        }
        Ok(Self { asset, points })
    }

    /// Convenience constructor for a contiguous observed series starting at `start`.
    pub fn from_daily(asset: Asset, start: NaiveDate, prices: &[f64]) -> Result<Self> {
        let points = prices
            .iter()
            .enumerate()
            .map(|(i, &price)| PricePoint {
                date: start + Days::new(i as u64),
                price,
                source: Source::Observed,
            })
            .collect();
        Self::new(asset, points)
    }

    pub fn asset(&self) -> Asset {
        self.asset
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.points.first().map(|p| p.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.points.last().map(|p| p.date)
    }

    pub fn prices(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.price).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    pub fn observed_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.source == Source::Observed)
            .count()
    }

    /// True when every calendar day between the first and last date is present.
    pub fn is_contiguous(&self) -> bool {
        self.points
            .windows(2)
            .all(|w| w[0].date.succ_opt() == Some(w[1].date))
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.points.binary_search_by_key(&date, |p| p.date).ok()
    }

    pub fn get(&self, date: NaiveDate) -> Option<&PricePoint> {
        self.index_of(date).map(|i| &self.points[i])
    }

    /// Sub-series with dates in `[from, to]`.
    pub fn slice_dates(&self, from: NaiveDate, to: NaiveDate) -> PriceSeries {
        let points = self
            .points
            .iter()
            .filter(|p| p.date >= from && p.date <= to)
            .copied()
            .collect();
        PriceSeries {
            asset: self.asset,
            points,
        }
    }

    /// Writes `date,price,source` rows with ISO dates.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "date,price,source").map_err(io)?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.date, p.price, p.source.as_str()).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Result of reading a raw price file.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub series: PriceSeries,
    /// Rows whose price field was empty.
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DateStyle {
    Iso,
    /// M/D/YY
    UsShort,
    /// M/D/YYYY
    UsLong,
}

impl DateStyle {
    fn detect(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.contains('-') {
            return Some(DateStyle::Iso);
        }
        let year = s.rsplit('/').next()?;
        match year.len() {
            2 => Some(DateStyle::UsShort),
            4 => Some(DateStyle::UsLong),
            _ => None,
        }
    }

    fn parse(self, s: &str) -> Option<NaiveDate> {
        let fmt = match self {
            DateStyle::Iso => "%Y-%m-%d",
            DateStyle::UsShort => "%m/%d/%y",
            DateStyle::UsLong => "%m/%d/%Y",
        };
        NaiveDate::parse_from_str(s.trim(), fmt).ok()
    }
}

/// Reads a two-column `(date, price)` CSV with one header line.
///
/// The date style (`M/D/YY` or `YYYY-MM-DD`) is detected from the first data
/// row and must hold for the whole file. Rows with an empty price are dropped
/// and counted.
pub fn load_price_csv(path: impl AsRef<Path>, asset: Asset) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_price_csv(file, asset)
}

pub fn read_price_csv(reader: impl std::io::Read, asset: Asset) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut style = None;
    let mut points = Vec::new();
    let mut dropped_rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        // header is line 1
        let line = i + 2;
        let date_field = rec.get(0).unwrap_or("");
        if date_field.is_empty() && rec.iter().all(str::is_empty) {
            continue;
        }
        let style = *style.get_or_insert(DateStyle::detect(date_field).ok_or_else(|| {
            Error::BadDate {
                line,
                value: date_field.to_string(),
            }
        })?);
        let date = style.parse(date_field).ok_or_else(|| Error::BadDate {
            line,
            value: date_field.to_string(),
        })?;
        let price_field = rec.get(1).unwrap_or("");
        if price_field.is_empty() {
            dropped_rows += 1;
            continue;
        }
        let price: f64 = price_field.parse().map_err(|_| Error::BadPrice {
            line,
            value: price_field.to_string(),
        })?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::BadPrice {
                line,
                value: price_field.to_string(),
            });
        }
        points.push(PricePoint {
            date,
            price,
            source: Source::Observed,
        });
    }
    Ok(Loaded {
        series: PriceSeries::new(asset, points)?,
        dropped_rows,
    })
}

/// Fills every missing calendar day between the first and last observed date
/// with a shape-preserving piecewise cubic Hermite interpolant. Observed points
/// are copied through unchanged; filled ones are tagged `Interpolated`.
pub fn hermite_fill(series: &PriceSeries) -> Result<PriceSeries> {
    let observed: Vec<&PricePoint> = series
        .points
        .iter()
        .filter(|p| p.source == Source::Observed)
        .collect();
    if observed.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            available: observed.len(),
        });
    }
    let origin = observed[0].date;
    let day = |d: NaiveDate| (d - origin).num_days() as f64;
    let xs: Vec<f64> = observed.iter().map(|p| day(p.date)).collect();
    let ys: Vec<f64> = observed.iter().map(|p| p.price).collect();
    let spline = HermiteSpline::new(&xs, &ys)?;

    let last = observed[observed.len() - 1].date;
    let total = (last - origin).num_days() as usize + 1;
    let mut points = Vec::with_capacity(total);
    let mut next_obs = observed.iter().peekable();
    for offset in 0..total {
        let date = origin + Days::new(offset as u64);
        if let Some(p) = next_obs.next_if(|p| p.date == date) {
            points.push(**p);
        } else {
            let price = spline.eval(offset as f64);
            if !(price > 0.0 && price.is_finite()) {
                return Err(Error::Numerical(format!(
                    "interpolated {} price on {date} is not positive ({price})",
                    series.asset
                )));
            }
            points.push(PricePoint {
                date,
                price,
                source: Source::Interpolated,
            });
        }
    }
    Ok(PriceSeries {
        asset: series.asset,
        points,
    })
}

/// Which days each asset can be traded, over a contiguous date range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    start: NaiveDate,
    gold_open: Vec<bool>,
}

impl TradingCalendar {
    pub fn new(start: NaiveDate, gold_open: Vec<bool>) -> Self {
        Self { start, gold_open }
    }

    /// Calendar where gold trades on weekdays only.
    pub fn weekdays(start: NaiveDate, days: usize) -> Self {
        use chrono::Datelike;
        let gold_open = (0..days)
            .map(|i| {
                let d = start + Days::new(i as u64);
                d.weekday().number_from_monday() <= 5
            })
            .collect();
        Self { start, gold_open }
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn len(&self) -> usize {
        self.gold_open.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold_open.is_empty()
    }

    /// Gold tradability by day index; out-of-range days are closed.
    pub fn gold_open_at(&self, index: usize) -> bool {
        self.gold_open.get(index).copied().unwrap_or(false)
    }

    pub fn is_tradable(&self, asset: Asset, date: NaiveDate) -> bool {
        let offset = (date - self.start).num_days();
        if offset < 0 || offset as usize >= self.gold_open.len() {
            return false;
        }
        match asset {
            Asset::Bitcoin => true,
            Asset::Gold => self.gold_open[offset as usize],
        }
    }
}

/// Gap-filled, date-aligned gold and bitcoin series plus their calendar.
#[derive(Debug, Clone)]
pub struct Market {
    pub gold: PriceSeries,
    pub btc: PriceSeries,
    pub calendar: TradingCalendar,
}

impl Market {
    pub fn len(&self) -> usize {
        self.gold.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gold.is_empty()
    }

    pub fn start(&self) -> NaiveDate {
        self.calendar.start
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.gold.index_of(date)
    }

    /// Restricts the market to `[from, to]`.
    pub fn slice_dates(&self, from: NaiveDate, to: NaiveDate) -> Result<Market> {
        align(&self.gold.slice_dates(from, to), &self.btc.slice_dates(from, to))
    }
}

/// Truncates both gap-filled series to their common date range and builds the
/// calendar: bitcoin trades every day, gold only on days observed in its file.
pub fn align(gold: &PriceSeries, btc: &PriceSeries) -> Result<Market> {
    for s in [gold, btc] {
        if !s.is_contiguous() {
            return Err(Error::Data(format!(
                "{} series has calendar gaps; fill it first",
                s.asset
            )));
        }
    }
    let (Some(g0), Some(g1), Some(b0), Some(b1)) =
        (gold.first_date(), gold.last_date(), btc.first_date(), btc.last_date())
    else {
        return Err(Error::Data("empty series".into()));
    };
    let from = g0.max(b0);
    let to = g1.min(b1);
    if from > to {
        return Err(Error::Data(format!(
            "no overlap between gold {g0}..{g1} and bitcoin {b0}..{b1}"
        )));
    }
    let gold = gold.slice_dates(from, to);
    let btc = btc.slice_dates(from, to);
    let gold_open = gold
        .points
        .iter()
        .map(|p| p.source == Source::Observed)
        .collect();
    Ok(Market {
        gold,
        btc,
        calendar: TradingCalendar::new(from, gold_open),
    })
}

/// Loads, fills and aligns the two raw price files.
pub fn load_market(gold_csv: impl AsRef<Path>, btc_csv: impl AsRef<Path>) -> Result<Market> {
    let gold = hermite_fill(&load_price_csv(gold_csv, Asset::Gold)?.series)?;
    let btc = hermite_fill(&load_price_csv(btc_csv, Asset::Bitcoin)?.series)?;
    align(&gold, &btc)
}
