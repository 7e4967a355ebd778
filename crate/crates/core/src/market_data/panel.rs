use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::{CrisisWindow, Sector};
use crate::{Error, Result};

/// Aligned daily closing prices: one row per date, one column per ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    sectors: Vec<Sector>,
    prices: DMatrix<f64>,
}

impl PricePanel {
    /// Builds a panel, checking every structural invariant.
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        sectors: Vec<Sector>,
        prices: DMatrix<f64>,
    ) -> Result<Self> {
        if dates.is_empty() || tickers.is_empty() {
            return Err(Error::InsufficientData("price panel has no rows or no tickers".into()));
        }
        if prices.nrows() != dates.len() || prices.ncols() != tickers.len() {
            return Err(Error::Config(format!(
                "price matrix is {}x{}, expected {}x{}",
                prices.nrows(),
                prices.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        if sectors.len() != tickers.len() {
            return Err(Error::Config(format!(
                "{} sector labels for {} tickers",
                sectors.len(),
                tickers.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "dates must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(t) = tickers.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::Config(format!("duplicate ticker {t}")));
        }
        for (j, col) in prices.column_iter().enumerate() {
            if let Some((i, p)) = col.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
                return Err(Error::Config(format!(
                    "price for {} on {} is {p}; prices must be positive and finite",
                    tickers[j], dates[i]
                )));
            }
        }
        Ok(Self { dates, tickers, sectors, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// `T_total x N` price matrix.
    pub fn prices(&self) -> &DMatrix<f64> {
        &self.prices
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn sector_of(&self, ticker: &str) -> Option<Sector> {
        self.tickers.iter().position(|t| t == ticker).map(|i| self.sectors[i])
    }

    /// Number of tickers per sector, in universe order.
    pub fn sector_counts(&self) -> [usize; 11] {
        let mut counts = [0; 11];
        for s in &self.sectors {
            counts[s.index()] += 1;
        }
        counts
    }

    /// Restricts rows to dates inside `[window.start, window.end]`.
    pub fn slice_window(&self, window: &CrisisWindow) -> Result<PricePanel> {
        let first = self.dates.partition_point(|d| *d < window.start);
        let last = self.dates.partition_point(|d| *d <= window.end);
        if first >= last {
            return Err(Error::EmptySlice(format!(
                "window {} ({}..{}) has no trading days in panel range {}..{}",
                window.name,
                window.start,
                window.end,
                self.dates[0],
                self.dates[self.dates.len() - 1]
            )));
        }
        Ok(PricePanel {
            dates: self.dates[first..last].to_vec(),
            tickers: self.tickers.clone(),
            sectors: self.sectors.clone(),
            prices: self.prices.rows(first, last - first).into_owned(),
        })
    }

    /// Panel restricted to the given columns, in the given order.
    pub fn select_assets(&self, columns: &[usize]) -> PricePanel {
        PricePanel {
            dates: self.dates.clone(),
            tickers: columns.iter().map(|&j| self.tickers[j].clone()).collect(),
            sectors: columns.iter().map(|&j| self.sectors[j]).collect(),
            prices: self.prices.select_columns(columns),
        }
    }
}
