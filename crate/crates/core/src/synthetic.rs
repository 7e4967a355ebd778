//! Synthetic price panels from a market/sector factor model.
//!
//! Daily log returns follow
//! `r_{i,t} = drift_{s(i)} + β_m F_t + β_s G_{s(i),t} + σ_ε ε_{i,t}`
//! with independent standard factors and noise; prices start at 100.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::market_data::{PricePanel, Sector};
use crate::rng::substream;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorModelSpec {
    pub n_sectors: usize,
    pub stocks_per_sector: usize,
    /// Number of daily returns; the panel has `days + 1` price rows.
    pub days: usize,
    #[serde(default)]
    pub market_beta: f64,
    #[serde(default)]
    pub sector_beta: f64,
    pub idio_sigma: f64,
    /// Per-sector drift; a single value applies to every sector, empty means zero.
    #[serde(default)]
    pub drift: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Degrees of freedom for unit-variance Student-t noise; Gaussian if absent.
    #[serde(default)]
    pub student_t_dof: Option<f64>,
    #[serde(default = "default_start")]
    pub start_date: NaiveDate,
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).unwrap()
}

impl FactorModelSpec {
    pub fn new(n_sectors: usize, stocks_per_sector: usize, days: usize) -> Self {
        Self {
            n_sectors,
            stocks_per_sector,
            days,
            market_beta: 0.0,
            sector_beta: 0.0,
            idio_sigma: 1.0,
            drift: Vec::new(),
            seed: 0,
            student_t_dof: None,
            start_date: default_start(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(format!("factor model spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sectors == 0 || self.n_sectors > Sector::ALL.len() {
            return Err(Error::Config(format!("n_sectors must be in 1..=11, got {}", self.n_sectors)));
        }
        if self.stocks_per_sector == 0 || self.days < 2 {
            return Err(Error::Config("need at least one stock per sector and two days".into()));
        }
        if !(self.market_beta >= 0.0 && self.sector_beta >= 0.0) {
            return Err(Error::Config("factor betas must be nonnegative".into()));
        }
        if !(self.idio_sigma > 0.0 && self.idio_sigma.is_finite()) {
            return Err(Error::Config("idio_sigma must be positive".into()));
        }
        if !(self.drift.is_empty() || self.drift.len() == 1 || self.drift.len() == self.n_sectors) {
            return Err(Error::Config(format!(
                "drift must have 0, 1 or {} entries, got {}",
                self.n_sectors,
                self.drift.len()
            )));
        }
        if let Some(dof) = self.student_t_dof {
            if !(dof > 2.0) {
                return Err(Error::Config("Student-t degrees of freedom must exceed 2".into()));
            }
        }
        Ok(())
    }

    fn drift_of(&self, sector: usize) -> f64 {
        match self.drift.len() {
            0 => 0.0,
            1 => self.drift[0],
            _ => self.drift[sector],
        }
    }

    /// Correlation between two stocks of the same sector.
    pub fn within_sector_correlation(&self) -> f64 {
        let common = self.market_beta.powi(2) + self.sector_beta.powi(2);
        common / (common + self.idio_sigma.powi(2))
    }

    /// Correlation between stocks of different sectors.
    pub fn cross_sector_correlation(&self) -> f64 {
        let total = self.market_beta.powi(2) + self.sector_beta.powi(2) + self.idio_sigma.powi(2);
        self.market_beta.powi(2) / total
    }
}

fn weekdays_from(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Generates the panel; tickers are `<sector code><index>`.
pub fn generate(spec: &FactorModelSpec) -> Result<PricePanel> {
    spec.validate()?;
    let n = spec.n_sectors * spec.stocks_per_sector;
    let sector_of: Vec<usize> = (0..n).map(|i| i / spec.stocks_per_sector).collect();
    let mut rng = substream(spec.seed, &[0x5347_4e54]);
    let t_dist = spec.student_t_dof.map(|dof| (StudentT::new(dof).expect("dof validated"), ((dof - 2.0) / dof).sqrt()));
    let noise = |rng: &mut crate::rng::SubstreamRng| -> f64 {
        match &t_dist {
            Some((t, scale)) => t.sample(rng) * scale,
            None => rng.sample(StandardNormal),
        }
    };

    let mut prices = DMatrix::from_element(spec.days + 1, n, 100.0);
    let mut log_level = vec![100f64.ln(); n];
    let mut sector_factor = vec![0.0; spec.n_sectors];
    for t in 1..=spec.days {
        let market: f64 = rng.sample(StandardNormal);
        for g in sector_factor.iter_mut() {
            *g = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let s = sector_of[i];
            let r = spec.drift_of(s) + spec.market_beta * market + spec.sector_beta * sector_factor[s] + spec.idio_sigma * noise(&mut rng);
            log_level[i] += r;
            prices[(t, i)] = log_level[i].exp();
        }
    }
    let tickers = (0..n)
        .map(|i| format!("{}{:03}", Sector::ALL[sector_of[i]].code(), i % spec.stocks_per_sector))
        .collect();
    let sectors = sector_of.iter().map(|&s| Sector::ALL[s]).collect();
    PricePanel::new(weekdays_from(spec.start_date, spec.days + 1), tickers, sectors, prices)
}
