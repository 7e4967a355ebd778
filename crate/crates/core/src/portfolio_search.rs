//! Random equal-weight portfolio search.
//!
//! Weights are fixed at `1/k`; only the choice of constituents varies. Draws
//! are ranked by daily Sharpe ratio and the sector make-up of the best
//! fraction is summarised as a [`SectorAllocation`].

use nalgebra::DMatrix;
use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

use crate::collectivity::{log_returns, ReturnPanel};
use crate::market_data::{CrisisWindow, PricePanel, Sector};
use crate::rng::substream;
use crate::stats::{mean, sample_std};
use crate::{Error, Result};

/// Redraws allowed for a zero-variance portfolio.
pub const MAX_REDRAWS: u64 = 100;

/// Tolerance on the unit sum of a [`SectorAllocation`].
pub const ALLOCATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    pub n_draws: usize,
    pub portfolio_size: usize,
    pub top_fraction: f64,
    pub risk_free_rate: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { n_draws: 100_000, portfolio_size: 40, top_fraction: 0.01, risk_free_rate: 0.0, seed: 0 }
    }
}

impl SearchConfig {
    pub fn validate(&self, n_assets: usize) -> Result<()> {
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::Config(format!("top fraction {} not in (0, 1]", self.top_fraction)));
        }
        if self.n_draws == 0 {
            return Err(Error::Config("n_draws must be at least 1".into()));
        }
        if self.portfolio_size == 0 {
            return Err(Error::Config("portfolio size must be at least 1".into()));
        }
        if self.portfolio_size > n_assets {
            return Err(Error::Config(format!(
                "portfolio size {} exceeds the {n_assets} available tickers",
                self.portfolio_size
            )));
        }
        if !self.risk_free_rate.is_finite() {
            return Err(Error::Config("risk-free rate must be finite".into()));
        }
        Ok(())
    }

    /// `⌈top_fraction · n⌉`, robust to the representation error of the fraction.
    pub fn retained(&self, n: usize) -> usize {
        let exact = self.top_fraction * n as f64;
        let rounded = exact.round();
        let k = if (exact - rounded).abs() < 1e-9 { rounded } else { exact.ceil() };
        (k as usize).clamp(1, n)
    }
}

/// Proportions over the eleven-sector universe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorAllocation {
    proportions: Vec<f64>,
}

impl SectorAllocation {
    /// Requires 11 nonnegative finite entries summing to 1.
    pub fn new(proportions: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(proportions, ALLOCATION_TOLERANCE)
    }

    /// As [`SectorAllocation::new`] with a caller-chosen sum tolerance, for
    /// published tables whose columns are rounded.
    pub fn with_tolerance(proportions: Vec<f64>, tolerance: f64) -> Result<Self> {
        if proportions.len() != Sector::ALL.len() {
            return Err(Error::Config(format!(
                "allocation has {} entries; the sector universe has {}",
                proportions.len(),
                Sector::ALL.len()
            )));
        }
        if proportions.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Config("allocation entries must be nonnegative and finite".into()));
        }
        let total: f64 = proportions.iter().sum();
        if (total - 1.0).abs() > tolerance {
            return Err(Error::Config(format!("allocation sums to {total}, not 1")));
        }
        Ok(Self { proportions })
    }

    /// Normalised counts per sector.
    pub fn from_counts(counts: &[usize; 11]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::InsufficientData("no sector counts".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// Share of tickers per sector, by count.
    pub fn index_of(sectors: &[Sector]) -> Result<Self> {
        let mut counts = [0usize; 11];
        for s in sectors {
            counts[s.index()] += 1;
        }
        Self::from_counts(&counts)
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn get(&self, sector: Sector) -> f64 {
        self.proportions[sector.index()]
    }
}

/// Half the L1 distance between two probability vectors (total variation,
/// equal to the discrete Wasserstein distance under the 0-1 metric).
pub fn allocation_distance(p: &SectorAllocation, q: &SectorAllocation) -> f64 {
    half_l1(&p.proportions, &q.proportions)
}

/// Slice form of [`allocation_distance`]; errors on mismatched lengths.
pub fn allocation_distance_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Config(format!("allocations over different universes ({} vs {})", p.len(), q.len())));
    }
    Ok(half_l1(p, q))
}

fn half_l1(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Sharpe ratio of a daily return series: `(mean - R_f) / std` with ddof 1.
pub fn sharpe_of_series(series: &[f64], risk_free_rate: f64) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::InsufficientData("Sharpe ratio needs at least 2 returns".into()));
    }
    if series.iter().all(|&x| x == series[0]) {
        return Err(Error::DegeneratePortfolio);
    }
    let sd = sample_std(series);
    if sd == 0.0 {
        return Err(Error::DegeneratePortfolio);
    }
    Ok((mean(series) - risk_free_rate) / sd)
}

/// Daily returns of the equal-weight portfolio over `members`.
pub fn portfolio_series(returns: &DMatrix<f64>, members: &[usize]) -> Vec<f64> {
    let weight = 1.0 / members.len() as f64;
    let mut series = vec![0.0; returns.nrows()];
    for &j in members {
        for (acc, r) in series.iter_mut().zip(returns.column(j).iter()) {
            *acc += r;
        }
    }
    series.iter_mut().for_each(|x| *x *= weight);
    series
}

/// Sharpe ratio of the equal-weight portfolio over `members`.
pub fn portfolio_sharpe(returns: &ReturnPanel, members: &[usize], risk_free_rate: f64) -> Result<f64> {
    if returns.len() < 3 {
        return Err(Error::InsufficientData(format!("{} returns; need at least 3", returns.len())));
    }
    if members.is_empty() || members.iter().any(|&j| j >= returns.n_assets()) {
        return Err(Error::Config("portfolio members out of range".into()));
    }
    sharpe_of_series(&portfolio_series(returns.returns(), members), risk_free_rate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPortfolio {
    /// Position of the portfolio in the evaluated sequence.
    pub draw: usize,
    pub sharpe: f64,
    /// Column indices, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    /// Retained portfolios, best first.
    pub top: Vec<RankedPortfolio>,
    pub allocation: SectorAllocation,
    pub evaluated: usize,
    /// Portfolios skipped for zero variance (exhaustive mode only).
    pub degenerate: usize,
}

fn rank(mut scored: Vec<RankedPortfolio>) -> Vec<RankedPortfolio> {
    scored.sort_by(|x, y| y.sharpe.total_cmp(&x.sharpe).then(x.draw.cmp(&y.draw)));
    scored
}

fn summarise(returns: &ReturnPanel, config: &SearchConfig, ranked: Vec<RankedPortfolio>, degenerate: usize) -> Result<SearchResult> {
    if ranked.is_empty() {
        return Err(Error::InsufficientData("no portfolio with nonzero variance".into()));
    }
    let evaluated = ranked.len();
    let keep = config.retained(evaluated);
    let top: Vec<RankedPortfolio> = ranked.into_iter().take(keep).collect();
    let mut counts = [0usize; 11];
    for p in &top {
        for &j in &p.members {
            counts[returns.sectors()[j].index()] += 1;
        }
    }
    Ok(SearchResult { allocation: SectorAllocation::from_counts(&counts)?, top, evaluated, degenerate })
}

fn draw_portfolio(returns: &ReturnPanel, config: &SearchConfig, draw: usize) -> Result<RankedPortfolio> {
    let n = returns.n_assets();
    for attempt in 0..MAX_REDRAWS {
        let mut rng = substream(config.seed, &[draw as u64, attempt]);
        let mut members = index::sample(&mut rng, n, config.portfolio_size).into_vec();
        members.sort_unstable();
        match sharpe_of_series(&portfolio_series(returns.returns(), &members), config.risk_free_rate) {
            Ok(sharpe) => return Ok(RankedPortfolio { draw, sharpe, members }),
            Err(Error::DegeneratePortfolio) => {
                log::debug!("search draw {draw}: zero-variance portfolio; redrawing");
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::InsufficientData(format!("search draw {draw}: {MAX_REDRAWS} consecutive zero-variance portfolios")))
}

/// Samples `n_draws` uniform `k`-subsets, ranks them by Sharpe ratio (ties
/// to the earlier draw) and summarises the top fraction.
pub fn run_search(returns: &ReturnPanel, config: &SearchConfig) -> Result<SearchResult> {
    config.validate(returns.n_assets())?;
    if returns.len() < 3 {
        return Err(Error::InsufficientData(format!("{} returns; need at least 3", returns.len())));
    }
    let scored = (0..config.n_draws)
        .into_par_iter()
        .map(|d| draw_portfolio(returns, config, d))
        .collect::<Result<Vec<_>>>()?;
    summarise(returns, config, rank(scored), 0)
}

/// Ranks an explicit list of portfolios; zero-variance ones are skipped and
/// counted. `n_draws` and `seed` in `config` are ignored.
pub fn rank_portfolios(returns: &ReturnPanel, portfolios: &[Vec<usize>], config: &SearchConfig) -> Result<SearchResult> {
    config.validate(returns.n_assets())?;
    if returns.len() < 3 {
        return Err(Error::InsufficientData(format!("{} returns; need at least 3", returns.len())));
    }
    let scored: Vec<Option<RankedPortfolio>> = portfolios
        .par_iter()
        .enumerate()
        .map(|(draw, members)| {
            let mut members = members.clone();
            members.sort_unstable();
            match portfolio_sharpe(returns, &members, config.risk_free_rate) {
                Ok(sharpe) => Ok(Some(RankedPortfolio { draw, sharpe, members })),
                Err(Error::DegeneratePortfolio) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let degenerate = scored.iter().filter(|s| s.is_none()).count();
    summarise(returns, config, rank(scored.into_iter().flatten().collect()), degenerate)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn enumerate_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (0..k).rev().find(|&i| current[i] != i + n - k) else {
            return out;
        };
        current[i] += 1;
        for j in (i + 1)..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// Allocations per crisis plus the index, with their pairwise distances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationMatrix {
    /// Crisis names followed by `"Index"`.
    pub labels: Vec<String>,
    pub allocations: Vec<SectorAllocation>,
    pub distances: Vec<Vec<f64>>,
}

pub fn crisis_allocation_matrix(panel: &PricePanel, crises: &[CrisisWindow], config: &SearchConfig) -> Result<AllocationMatrix> {
    let mut labels = Vec::with_capacity(crises.len() + 1);
    let mut allocations = Vec::with_capacity(crises.len() + 1);
    for crisis in crises {
        let returns = log_returns(&panel.slice_window(crisis)?)?;
        allocations.push(run_search(&returns, config)?.allocation);
        labels.push(crisis.name.clone());
    }
    labels.push("Index".to_string());
    allocations.push(SectorAllocation::index_of(panel.sectors())?);
    let distances = allocations
        .iter()
        .map(|p| allocations.iter().map(|q| allocation_distance(p, q)).collect())
        .collect();
    Ok(AllocationMatrix { labels, allocations, distances })
}
