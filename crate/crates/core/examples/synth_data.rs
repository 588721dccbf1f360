//! Generates the bundled synthetic price files.
//!
//! Log prices follow Brownian bridges between hand-picked anchor dates, so
//! the series rise and fall through roughly the 2016-2021 regimes of each
//! market without reproducing any real quotes. Gold trades on weekdays only,
//! skips a few holidays and has some blank fixes; bitcoin trades daily.
//!
//!     cargo run -p ctp-core --example synth_data -- data

use std::io::Write;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn d(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

/// Daily prices from the first anchor date through the last.
fn bridge(anchors: &[(&str, f64)], vol: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut out = vec![anchors[0].1];
    for w in anchors.windows(2) {
        let (a, b) = ((d(w[0].0), w[0].1.ln()), (d(w[1].0), w[1].1.ln()));
        let n = (b.0 - a.0).num_days() as usize;
        let mut walk = vec![0.0];
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            walk.push(walk.last().unwrap() + vol * z);
        }
        let end = walk[n];
        for (t, w) in walk.iter().enumerate().skip(1) {
            let s = t as f64 / n as f64;
            out.push((a.1 + (b.1 - a.1) * s + w - s * end).exp());
        }
    }
    out
}

fn mdyy(date: NaiveDate) -> String {
    format!("{}/{}/{:02}", date.month(), date.day(), date.year() % 100)
}

fn is_holiday(date: NaiveDate) -> bool {
    matches!((date.month(), date.day()), (12, 25) | (12, 26) | (1, 1))
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    std::fs::create_dir_all(&dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20160911);

    let btc_anchors = [
        ("2016-06-01", 530.0),
        ("2016-09-11", 605.0),
        ("2017-12-17", 19000.0),
        ("2018-12-15", 3200.0),
        ("2019-06-26", 12000.0),
        ("2020-03-12", 5000.0),
        ("2021-04-14", 63000.0),
        ("2021-07-20", 30000.0),
        ("2021-09-10", 46000.0),
    ];
    let gold_anchors = [
        ("2016-06-01", 1210.0),
        ("2016-07-06", 1366.0),
        ("2016-12-15", 1130.0),
        ("2018-04-11", 1350.0),
        ("2018-08-16", 1175.0),
        ("2019-09-04", 1550.0),
        ("2020-03-19", 1475.0),
        ("2020-08-06", 2067.0),
        ("2021-03-08", 1680.0),
        ("2021-09-10", 1794.0),
    ];
    let btc = bridge(&btc_anchors, 0.04, &mut rng);
    let gold = bridge(&gold_anchors, 0.009, &mut rng);
    let start = d("2016-06-01");

    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("bitcoin.csv"))?);
    writeln!(f, "Date,Value")?;
    for (k, p) in btc.iter().enumerate() {
        writeln!(f, "{},{:.2}", mdyy(start + chrono::Days::new(k as u64)), p)?;
    }

    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("gold.csv"))?);
    writeln!(f, "Date,USD (PM)")?;
    for (k, p) in gold.iter().enumerate() {
        let date = start + chrono::Days::new(k as u64);
        if matches!(date.weekday(), Weekday::Sat | Weekday::Sun) || is_holiday(date) {
            continue;
        }
        // A handful of missing fixes, as published series have.
        if k % 397 == 200 {
            writeln!(f, "{},", mdyy(date))?;
        } else {
            writeln!(f, "{},{:.2}", mdyy(date), p)?;
        }
    }
    f.flush()
}
