use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{PricePanel, Sector};
use crate::{Error, Result};

/// A ticker excluded during alignment, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroppedTicker {
    pub ticker: String,
    pub reason: String,
}

/// Result of [`load_panel`]: the aligned panel plus the drop report.
#[derive(Debug, Clone)]
pub struct LoadedPanel {
    pub panel: PricePanel,
    pub dropped: Vec<DroppedTicker>,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn ingest(path: &Path, row: u64, message: impl Into<String>) -> Error {
    Error::Ingest {
        path: path.display().to_string(),
        row,
        message: message.into(),
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let header = reader
        .headers()
        .map_err(|e| ingest(path, 1, format!("unreadable header: {e}")))?;
    let got: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(ingest(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn row_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads a `ticker,sector` file.
pub fn read_sectors(path: impl AsRef<Path>) -> Result<HashMap<String, Sector>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    check_header(path, &mut reader, &["ticker", "sector"])?;
    let mut map = HashMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map(|p| p.line()).unwrap_or(0);
            ingest(path, row, format!("malformed row: {e}"))
        })?;
        let row = row_of(&record);
        if record.len() != 2 {
            return Err(ingest(path, row, format!("expected 2 fields, found {}", record.len())));
        }
        let ticker = &record[0];
        if ticker.is_empty() {
            return Err(ingest(path, row, "empty ticker"));
        }
        let sector: Sector = record[1]
            .parse()
            .map_err(|e: super::sector::UnknownSector| ingest(path, row, e.to_string()))?;
        if map.insert(ticker.to_string(), sector).is_some() {
            return Err(ingest(path, row, format!("duplicate ticker {ticker}")));
        }
    }
    Ok(map)
}

/// Reads a long-format `date,ticker,close` file into per-ticker series.
pub fn read_prices(path: impl AsRef<Path>) -> Result<BTreeMap<String, BTreeMap<NaiveDate, f64>>> {
    let path = path.as_ref();
    let mut reader = open(path)?;
    check_header(path, &mut reader, &["date", "ticker", "close"])?;
    let mut series: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map(|p| p.line()).unwrap_or(0);
            ingest(path, row, format!("malformed row: {e}"))
        })?;
        let row = row_of(&record);
        if record.len() != 3 {
            return Err(ingest(path, row, format!("expected 3 fields, found {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| ingest(path, row, format!("bad date {:?}: {e}", &record[0])))?;
        let ticker = &record[1];
        if ticker.is_empty() {
            return Err(ingest(path, row, "empty ticker"));
        }
        let close: f64 = record[2]
            .parse()
            .map_err(|e| ingest(path, row, format!("bad close {:?}: {e}", &record[2])))?;
        if !(close.is_finite() && close > 0.0) {
            return Err(ingest(path, row, format!("close must be positive and finite, got {close}")));
        }
        if series.entry(ticker.to_string()).or_default().insert(date, close).is_some() {
            return Err(ingest(path, row, format!("duplicate price for {ticker} on {date}")));
        }
    }
    Ok(series)
}

/// Loads and aligns a price panel.
///
/// The date axis is every observed date inside the intersection of all
/// tickers' date ranges. Tickers with any gap on that axis, or without a
/// sector label, are dropped and reported.
pub fn load_panel(price_path: impl AsRef<Path>, sector_path: impl AsRef<Path>) -> Result<LoadedPanel> {
    let price_path = price_path.as_ref();
    let sectors = read_sectors(sector_path)?;
    let series = read_prices(price_path)?;
    if series.is_empty() {
        return Err(ingest(price_path, 1, "no price rows"));
    }

    let mut dropped = Vec::new();
    let labelled: Vec<(&String, &BTreeMap<NaiveDate, f64>, Sector)> = series
        .iter()
        .filter_map(|(ticker, s)| match sectors.get(ticker) {
            Some(&sector) => Some((ticker, s, sector)),
            None => {
                dropped.push(DroppedTicker {
                    ticker: ticker.clone(),
                    reason: "no sector label".into(),
                });
                None
            }
        })
        .collect();
    if labelled.is_empty() {
        return Err(ingest(price_path, 1, "no ticker has a sector label"));
    }

    let lo = labelled.iter().map(|(_, s, _)| *s.keys().next().unwrap()).max().unwrap();
    let hi = labelled.iter().map(|(_, s, _)| *s.keys().next_back().unwrap()).min().unwrap();
    if lo > hi {
        return Err(ingest(
            price_path,
            1,
            format!("empty intersection of ticker date ranges (latest start {lo}, earliest end {hi})"),
        ));
    }
    let axis: Vec<NaiveDate> = labelled
        .iter()
        .flat_map(|(_, s, _)| s.range(lo..=hi).map(|(d, _)| *d))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut tickers = Vec::new();
    let mut labels = Vec::new();
    let mut columns: Vec<f64> = Vec::new();
    for (ticker, s, sector) in labelled {
        let missing = axis.iter().filter(|d| !s.contains_key(d)).count();
        if missing > 0 {
            dropped.push(DroppedTicker {
                ticker: ticker.clone(),
                reason: format!("missing {missing} of {} dates in {lo}..{hi}", axis.len()),
            });
            continue;
        }
        columns.extend(axis.iter().map(|d| s[d]));
        tickers.push(ticker.clone());
        labels.push(sector);
    }
    if tickers.is_empty() {
        return Err(ingest(price_path, 1, "no ticker has complete coverage of the common date range"));
    }
    let prices = DMatrix::from_column_slice(axis.len(), tickers.len(), &columns);
    let panel = PricePanel::new(axis, tickers, labels, prices)?;
    Ok(LoadedPanel { panel, dropped })
}

/// Writes `date,ticker,close` and `ticker,sector` files readable by [`load_panel`].
pub fn write_panel(panel: &PricePanel, price_path: impl AsRef<Path>, sector_path: impl AsRef<Path>) -> Result<()> {
    let io_err = |path: &Path| {
        let path = path.display().to_string();
        move |source| Error::Io { path: path.clone(), source }
    };
    let price_path = price_path.as_ref();
    let sector_path = sector_path.as_ref();

    let mut out = std::io::BufWriter::new(File::create(price_path).map_err(io_err(price_path))?);
    writeln!(out, "date,ticker,close").map_err(io_err(price_path))?;
    for (i, date) in panel.dates().iter().enumerate() {
        for (j, ticker) in panel.tickers().iter().enumerate() {
            writeln!(out, "{date},{ticker},{}", panel.prices()[(i, j)]).map_err(io_err(price_path))?;
        }
    }
    out.flush().map_err(io_err(price_path))?;

    let mut out = std::io::BufWriter::new(File::create(sector_path).map_err(io_err(sector_path))?);
    writeln!(out, "ticker,sector").map_err(io_err(sector_path))?;
    for (ticker, sector) in panel.tickers().iter().zip(panel.sectors()) {
        writeln!(out, "{ticker},{sector}").map_err(io_err(sector_path))?;
    }
    out.flush().map_err(io_err(sector_path))?;
    Ok(())
}
