//! Diversification pathways from random `(w, a)` portfolios.
//!
//! A `(w, a)` portfolio holds `w` equities from each of `a` distinct sectors.
//! For each cell of the grid, `D` random portfolios are drawn; each draw's
//! normalised leading eigenvalue is tracked through every rolling window, the
//! median across draws is taken per window, and the temporal mean of that
//! median series is `μ_{w,a}`.

use std::ops::RangeInclusive;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::collectivity::{leading_series, LeadingSeriesError, ReturnPanel};
use crate::market_data::Sector;
use crate::rng::substream;
use crate::stats::median_in_place;
use crate::{Error, Result};

/// Redraws allowed per draw before a zero-variance window becomes an error.
pub const MAX_REDRAWS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingConfig {
    /// Equities per sector.
    pub w_range: RangeInclusive<usize>,
    /// Number of sectors.
    pub a_range: RangeInclusive<usize>,
    pub draws: usize,
    pub window: usize,
    pub seed: u64,
    /// Keep the per-cell median series in the resulting table.
    pub keep_median_series: bool,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            w_range: 2..=9,
            a_range: 2..=9,
            draws: 1000,
            window: crate::collectivity::DEFAULT_WINDOW,
            seed: 0,
            keep_median_series: false,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if *self.w_range.start() < 2 || *self.a_range.start() < 2 {
            return Err(Error::Config("w and a must be at least 2".into()));
        }
        if self.w_range.is_empty() || self.a_range.is_empty() {
            return Err(Error::Config("empty w or a range".into()));
        }
        if *self.a_range.end() > Sector::ALL.len() {
            return Err(Error::Config(format!("a cannot exceed {} sectors", Sector::ALL.len())));
        }
        if self.draws == 0 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        if self.window < 2 {
            return Err(Error::Config("window must be at least 2".into()));
        }
        Ok(())
    }
}

/// Indices of a random `(w, a)` portfolio, ascending.
///
/// `a` sectors are chosen uniformly without replacement among sectors holding
/// at least `w` tickers; within each, `w` tickers are chosen uniformly
/// without replacement.
pub fn sample_portfolio<R: Rng + ?Sized>(rng: &mut R, sectors: &[Sector], w: usize, a: usize) -> Result<Vec<usize>> {
    let mut members: [Vec<usize>; 11] = Default::default();
    for (i, s) in sectors.iter().enumerate() {
        members[s.index()].push(i);
    }
    let eligible: Vec<&Vec<usize>> = members.iter().filter(|m| m.len() >= w).collect();
    if eligible.len() < a {
        let counts: Vec<String> = Sector::ALL
            .iter()
            .zip(&members)
            .filter(|(_, m)| !m.is_empty())
            .map(|(s, m)| format!("{s}={}", m.len()))
            .collect();
        return Err(Error::Config(format!(
            "({w},{a}) portfolio needs {a} sectors with >= {w} tickers, only {} qualify [{}]",
            eligible.len(),
            counts.join(", ")
        )));
    }
    let mut picked = Vec::with_capacity(w * a);
    for s in index::sample(rng, eligible.len(), a) {
        let pool = eligible[s];
        picked.extend(index::sample(rng, pool.len(), w).into_iter().map(|k| pool[k]));
    }
    picked.sort_unstable();
    Ok(picked)
}

/// One draw's `λ̃₁(t)` series, redrawing on zero-variance windows.
fn draw_series(returns: &ReturnPanel, config: &SamplingConfig, w: usize, a: usize, draw: usize) -> Result<Vec<f64>> {
    for attempt in 0..MAX_REDRAWS {
        let mut rng = substream(config.seed, &[w as u64, a as u64, draw as u64, attempt]);
        let picked = sample_portfolio(&mut rng, returns.sectors(), w, a)?;
        match leading_series(returns.returns(), &picked, config.window) {
            Ok(series) => return Ok(series),
            Err(LeadingSeriesError::Degenerate { column, t }) => {
                log::debug!(
                    "({w},{a}) draw {draw}: {} has zero variance in window ending t={t}; redrawing",
                    returns.tickers()[column]
                );
            }
            Err(LeadingSeriesError::Numerical(e)) => return Err(e),
        }
    }
    Err(Error::InsufficientData(format!(
        "({w},{a}) draw {draw}: {MAX_REDRAWS} consecutive draws hit a zero-variance window"
    )))
}

fn check_length(returns: &ReturnPanel, config: &SamplingConfig) -> Result<()> {
    if returns.len() < config.window {
        return Err(Error::InsufficientData(format!(
            "{} returns is shorter than the window {}",
            returns.len(),
            config.window
        )));
    }
    Ok(())
}

/// Median over draws of `λ̃₁` for each window end `t = S ..= T`.
pub fn median_collectivity(returns: &ReturnPanel, config: &SamplingConfig, w: usize, a: usize) -> Result<Vec<f64>> {
    config.validate()?;
    check_length(returns, config)?;
    let draws = (0..config.draws)
        .into_par_iter()
        .map(|d| draw_series(returns, config, w, a, d))
        .collect::<Result<Vec<_>>>()?;
    let steps = draws[0].len();
    let mut column = vec![0.0; draws.len()];
    Ok((0..steps)
        .map(|t| {
            for (slot, series) in column.iter_mut().zip(&draws) {
                *slot = series[t];
            }
            median_in_place(&mut column)
        })
        .collect())
}

/// `μ_{w,a}` over the configured grid. Rows are sector counts `a`, columns
/// are equities per sector `w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversificationTable {
    pub w_values: Vec<usize>,
    pub a_values: Vec<usize>,
    mu: Vec<Vec<f64>>,
    /// `median_series[a_idx][w_idx]`, when retained.
    pub median_series: Option<Vec<Vec<Vec<f64>>>>,
}

impl DiversificationTable {
    /// Builds a table from rows indexed by `a` and columns by `w`.
    pub fn from_grid(w_values: Vec<usize>, a_values: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if w_values.is_empty() || a_values.is_empty() {
            return Err(Error::Config("empty diversification grid".into()));
        }
        let contiguous = |v: &[usize]| v.windows(2).all(|p| p[1] == p[0] + 1);
        if !contiguous(&w_values) || !contiguous(&a_values) {
            return Err(Error::Config("grid axes must be consecutive integers".into()));
        }
        if rows.len() != a_values.len() || rows.iter().any(|r| r.len() != w_values.len()) {
            return Err(Error::Config("grid shape does not match its axes".into()));
        }
        for (a, row) in a_values.iter().zip(&rows) {
            for (w, &mu) in w_values.iter().zip(row) {
                let floor = 1.0 / (w * a) as f64;
                if !(mu.is_finite() && mu >= floor - 1e-12 && mu <= 1.0 + 1e-12) {
                    return Err(Error::Numerical(format!("mu({w},{a}) = {mu} outside [{floor}, 1]")));
                }
            }
        }
        Ok(Self { w_values, a_values, mu: rows, median_series: None })
    }

    /// Rows indexed by `a`, columns by `w`.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.mu
    }

    pub fn get(&self, w: usize, a: usize) -> Option<f64> {
        let wi = w.checked_sub(self.w_values[0])?;
        let ai = a.checked_sub(self.a_values[0])?;
        self.mu.get(ai)?.get(wi).copied()
    }

    pub fn w_max(&self) -> usize {
        *self.w_values.last().unwrap()
    }

    pub fn a_max(&self) -> usize {
        *self.a_values.last().unwrap()
    }
}

/// Runs the sampling experiment over the whole grid.
pub fn mu_table(returns: &ReturnPanel, config: &SamplingConfig) -> Result<DiversificationTable> {
    config.validate()?;
    check_length(returns, config)?;
    let w_values: Vec<usize> = config.w_range.clone().collect();
    let a_values: Vec<usize> = config.a_range.clone().collect();
    let cells: Vec<(usize, usize)> = a_values.iter().flat_map(|&a| w_values.iter().map(move |&w| (w, a))).collect();
    let series = cells
        .par_iter()
        .map(|&(w, a)| median_collectivity(returns, config, w, a))
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = series.iter().map(|s| s.iter().sum::<f64>() / s.len() as f64).collect();
    let rows: Vec<Vec<f64>> = means.chunks(w_values.len()).map(<[f64]>::to_vec).collect();
    let mut table = DiversificationTable::from_grid(w_values.clone(), a_values, rows)?;
    if config.keep_median_series {
        table.median_series = Some(series.chunks(w_values.len()).map(<[Vec<f64>]>::to_vec).collect());
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathStep {
    pub w: usize,
    pub a: usize,
    pub mu: f64,
}

/// Greedy walk through the grid from its smallest cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyPath {
    pub steps: Vec<PathStep>,
}

impl GreedyPath {
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.steps.iter().map(|s| (s.w, s.a)).collect()
    }

    pub fn final_mu(&self) -> f64 {
        self.steps.last().expect("path has at least its start cell").mu
    }
}

/// From the smallest `(w, a)` cell, repeatedly step to whichever of
/// `(w+1, a)` and `(w, a+1)` has the smaller `μ`; ties go to `w+1`. Stops
/// when the best admissible move does not strictly decrease `μ` or both
/// coordinates are at their maximum.
pub fn greedy_path(table: &DiversificationTable) -> GreedyPath {
    let (mut w, mut a) = (table.w_values[0], table.a_values[0]);
    let mut mu = table.get(w, a).expect("start cell exists");
    let mut steps = vec![PathStep { w, a, mu }];
    loop {
        let up_w = (w < table.w_max()).then(|| (w + 1, a, table.get(w + 1, a).unwrap()));
        let up_a = (a < table.a_max()).then(|| (w, a + 1, table.get(w, a + 1).unwrap()));
        let next = match (up_w, up_a) {
            (Some(x), Some(y)) => {
                if x.2 <= y.2 {
                    x
                } else {
                    y
                }
            }
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => break,
        };
        if next.2 >= mu {
            break;
        }
        (w, a, mu) = next;
        steps.push(PathStep { w, a, mu });
    }
    GreedyPath { steps }
}

/// Grid averages: `μ_{w,·}` (over `a`, per `w`) and `μ_{·,a}` (over `w`, per `a`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginals {
    pub within_sector: Vec<(usize, f64)>,
    pub across_sector: Vec<(usize, f64)>,
}

pub fn marginal_means(table: &DiversificationTable) -> Marginals {
    let rows = table.rows();
    let within_sector = table
        .w_values
        .iter()
        .enumerate()
        .map(|(wi, &w)| (w, rows.iter().map(|r| r[wi]).sum::<f64>() / rows.len() as f64))
        .collect();
    let across_sector = table
        .a_values
        .iter()
        .zip(rows)
        .map(|(&a, r)| (a, r.iter().sum::<f64>() / r.len() as f64))
        .collect();
    Marginals { within_sector, across_sector }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn axis() -> Vec<usize> {
        (2..=9).collect()
    }

    fn grid(f: impl Fn(usize, usize) -> f64) -> DiversificationTable {
        let rows = axis().iter().map(|&a| axis().iter().map(|&w| f(w, a)).collect()).collect();
        DiversificationTable::from_grid(axis(), axis(), rows).unwrap()
    }

    #[test]
    fn sample_full_universe_when_forced() {
        let sectors = [Sector::Energy, Sector::Energy, Sector::Utilities, Sector::Utilities];
        let mut rng = substream(1, &[]);
        assert_eq!(sample_portfolio(&mut rng, &sectors, 2, 2).unwrap(), vec![0, 1, 2, 3]);
        assert!(matches!(sample_portfolio(&mut rng, &sectors, 2, 3), Err(Error::Config(_))));
    }

    #[test]
    fn sample_is_seeded() {
        let sectors: Vec<Sector> = (0..60).map(|i| Sector::ALL[i % 11]).collect();
        let a = sample_portfolio(&mut substream(9, &[3]), &sectors, 3, 4).unwrap();
        let b = sample_portfolio(&mut substream(9, &[3]), &sectors, 3, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        let mut per_sector = std::collections::BTreeMap::new();
        for i in &a {
            *per_sector.entry(sectors[*i]).or_insert(0) += 1;
        }
        assert_eq!(per_sector.len(), 4);
        assert!(per_sector.values().all(|&c| c == 3));
    }

    #[test]
    fn greedy_staircase_on_product_grid() {
        let path = greedy_path(&grid(|w, a| 1.0 / (w * a) as f64 + 0.01));
        let cells = path.cells();
        assert_eq!(cells[0], (2, 2));
        assert_eq!(cells[1], (3, 2));
        for pair in cells.windows(2) {
            let dw = pair[1].0 - pair[0].0;
            let da = pair[1].1 - pair[0].1;
            assert_eq!(dw + da, 1);
        }
        // Moves alternate between the two coordinates.
        for triple in cells.windows(3) {
            assert_ne!(triple[1].0 - triple[0].0, triple[2].0 - triple[1].0);
        }
        assert_eq!(*cells.last().unwrap(), (9, 9));
    }

    #[test]
    fn greedy_along_a_only() {
        let path = greedy_path(&grid(|w, a| 0.9 - 0.05 * a as f64 + 0.001 * w as f64));
        assert_eq!(path.cells(), (2..=9).map(|a| (2, a)).collect::<Vec<_>>());
    }

    #[test]
    fn marginals_of_constant_grid() {
        let m = marginal_means(&grid(|_, _| 0.5));
        assert!(m.within_sector.iter().chain(&m.across_sector).all(|(_, v)| *v == 0.5));
    }

    #[test]
    fn inflated_row_moves_only_its_marginal() {
        let base = marginal_means(&grid(|w, a| 0.3 + 0.01 * (w + a) as f64));
        let bumped = marginal_means(&grid(|w, a| 0.3 + 0.01 * (w + a) as f64 + if a == 5 { 0.2 } else { 0.0 }));
        for (x, y) in base.across_sector.iter().zip(&bumped.across_sector) {
            if x.0 == 5 {
                assert!((y.1 - x.1 - 0.2).abs() < 1e-12);
            } else {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn bounds_enforced() {
        assert!(DiversificationTable::from_grid(vec![2], vec![2], vec![vec![0.2]]).is_err());
        assert!(DiversificationTable::from_grid(vec![2], vec![2], vec![vec![1.2]]).is_err());
    }

    fn comonotone_returns() -> ReturnPanel {
        let t = 80;
        let base: Vec<f64> = (0..t).map(|i| ((i * 7919) % 101) as f64 / 1000.0 - 0.05).collect();
        let n = 8;
        let flat: Vec<f64> = (0..n).flat_map(|k| base.iter().map(move |b| b * (k + 1) as f64)).collect();
        let d0 = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        ReturnPanel::new(
            (0..t).map(|i| d0 + chrono::Days::new(i as u64)).collect(),
            (0..n).map(|i| format!("X{i}")).collect(),
            (0..n).map(|i| Sector::ALL[i % 4]).collect(),
            DMatrix::from_column_slice(t, n, &flat),
        )
        .unwrap()
    }

    #[test]
    fn comonotone_universe_has_unit_median() {
        let config = SamplingConfig { draws: 5, window: 20, seed: 4, ..Default::default() };
        let series = median_collectivity(&comonotone_returns(), &config, 2, 3).unwrap();
        assert_eq!(series.len(), 61);
        assert!(series.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_draw_median_is_that_draw() {
        let r = comonotone_returns();
        let config = SamplingConfig { draws: 1, window: 20, seed: 11, ..Default::default() };
        let median = median_collectivity(&r, &config, 2, 2).unwrap();
        let direct = draw_series(&r, &config, 2, 2, 0).unwrap();
        assert_eq!(median, direct);
    }
}
