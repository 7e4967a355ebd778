//! Python bindings: panels, collectivity, alignment, diversification and
//! portfolio search over plain lists.

use std::collections::BTreeMap;

use crisisdyn::collectivity::{collectivity_series as series, log_returns as returns_of, normalized_spectrum, ReturnPanel};
use crisisdyn::diversification::{self, DiversificationTable, SamplingConfig};
use crisisdyn::distribution_align::{self as align, EmpiricalDistribution};
use crisisdyn::market_data::{self, find_crisis};
use crisisdyn::portfolio_search::{self as search, SearchConfig, SectorAllocation};
use crisisdyn::synthetic::{self, FactorModelSpec};
use crisisdyn::{ErrorKind, PricePanel};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: crisisdyn::Error) -> PyErr {
    match e.kind() {
        ErrorKind::Config => PyValueError::new_err(e.to_string()),
        ErrorKind::Data => PyRuntimeError::new_err(e.to_string()),
        ErrorKind::Numerical => PyArithmeticError::new_err(e.to_string()),
    }
}

fn distribution(xs: Vec<f64>) -> PyResult<EmpiricalDistribution> {
    EmpiricalDistribution::new(xs).map_err(to_py)
}

/// Aligned daily close prices with sector labels.
#[pyclass(name = "Panel", frozen)]
pub struct Panel {
    inner: PricePanel,
}

#[pymethods]
impl Panel {
    #[getter]
    fn dates(&self) -> Vec<String> {
        self.inner.dates().iter().map(|d| d.to_string()).collect()
    }

    #[getter]
    fn tickers(&self) -> Vec<String> {
        self.inner.tickers().to_vec()
    }

    #[getter]
    fn sectors(&self) -> Vec<&'static str> {
        self.inner.sectors().iter().map(|s| s.name()).collect()
    }

    /// Prices as rows of dates.
    #[getter]
    fn prices(&self) -> Vec<Vec<f64>> {
        let p = self.inner.prices();
        p.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_dates(), self.inner.n_assets())
    }

    /// Restricts to a named crisis window, from `crises` or the built-in set.
    #[pyo3(signature = (crisis, crises=None))]
    fn window(&self, crisis: &str, crises: Option<&str>) -> PyResult<Panel> {
        let windows = match crises {
            Some(path) => market_data::load_crises(path).map_err(to_py)?,
            None => market_data::default_crises(),
        };
        let w = find_crisis(&windows, crisis).map_err(to_py)?;
        Ok(Panel { inner: self.inner.slice_window(w).map_err(to_py)? })
    }

    fn __repr__(&self) -> String {
        format!("Panel({} dates x {} tickers)", self.inner.n_dates(), self.inner.n_assets())
    }
}

impl Panel {
    fn returns(&self) -> PyResult<ReturnPanel> {
        returns_of(&self.inner).map_err(to_py)
    }
}

/// Loads long-format prices and a sector map; incomplete tickers are dropped.
#[pyfunction]
fn load_panel(prices: &str, sectors: &str) -> PyResult<Panel> {
    Ok(Panel { inner: market_data::load_panel(prices, sectors).map_err(to_py)?.panel })
}

/// Synthetic market/sector factor-model panel.
#[pyfunction]
#[pyo3(signature = (n_sectors, stocks_per_sector, days, market_beta=0.0, sector_beta=0.0, idio_sigma=1.0, seed=0, drift=None, student_t_dof=None))]
#[allow(clippy::too_many_arguments)]
fn generate(
    n_sectors: usize,
    stocks_per_sector: usize,
    days: usize,
    market_beta: f64,
    sector_beta: f64,
    idio_sigma: f64,
    seed: u64,
    drift: Option<Vec<f64>>,
    student_t_dof: Option<f64>,
) -> PyResult<Panel> {
    let mut spec = FactorModelSpec::new(n_sectors, stocks_per_sector, days);
    spec.market_beta = market_beta;
    spec.sector_beta = sector_beta;
    spec.idio_sigma = idio_sigma;
    spec.seed = seed;
    spec.drift = drift.unwrap_or_default();
    spec.student_t_dof = student_t_dof;
    Ok(Panel { inner: synthetic::generate(&spec).map_err(to_py)? })
}

/// Daily log returns as rows of dates.
#[pyfunction]
fn log_returns(panel: &Panel) -> PyResult<Vec<Vec<f64>>> {
    let r = panel.returns()?;
    Ok(r.returns().row_iter().map(|row| row.iter().copied().collect()).collect())
}

/// Normalised eigenvalues of a correlation matrix, descending.
#[pyfunction]
fn eigen_spectrum(matrix: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
    normalized_spectrum(&m).map_err(to_py)
}

/// Rolling leading collectivity: `(t, lambda1)` pairs with 1-based `t`.
#[pyfunction]
#[pyo3(signature = (panel, window=60))]
fn collectivity_series(panel: &Panel, window: usize) -> PyResult<Vec<(usize, f64)>> {
    let s = series(&panel.returns()?, window).map_err(to_py)?;
    Ok(s.timestamps.iter().copied().zip(s.leading()).collect())
}

#[pyfunction]
fn wasserstein1(f: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
    Ok(align::wasserstein1(&distribution(f)?, &distribution(g)?))
}

/// Best affine map of `f` onto `g`: `(scale, shift, residual)`.
#[pyfunction]
fn fit_operator(f: Vec<f64>, g: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let fit = align::fit_operator(&distribution(f)?, &distribution(g)?).map_err(to_py)?;
    Ok((fit.operator.scale, fit.operator.shift, fit.residual))
}

/// Mean median collectivity per `(a, w)` cell; rows are sector counts.
#[pyfunction]
#[pyo3(signature = (panel, draws=1000, window=60, seed=0, w_max=9, a_max=9))]
fn mu_table(py: Python<'_>, panel: &Panel, draws: usize, window: usize, seed: u64, w_max: usize, a_max: usize) -> PyResult<Vec<Vec<f64>>> {
    let config = SamplingConfig { w_range: 2..=w_max, a_range: 2..=a_max, draws, window, seed, keep_median_series: false };
    let returns = panel.returns()?;
    let table = py.detach(|| diversification::mu_table(&returns, &config)).map_err(to_py)?;
    Ok(table.rows().to_vec())
}

/// Greedy descent through a table whose rows are `a_values` and columns
/// `w_values`; returns `(w, a, mu)` steps.
#[pyfunction]
#[pyo3(signature = (rows, w_values=None, a_values=None))]
fn greedy_path(rows: Vec<Vec<f64>>, w_values: Option<Vec<usize>>, a_values: Option<Vec<usize>>) -> PyResult<Vec<(usize, usize, f64)>> {
    let w_values = w_values.unwrap_or_else(|| (2..2 + rows.first().map_or(0, |r| r.len())).collect());
    let a_values = a_values.unwrap_or_else(|| (2..2 + rows.len()).collect());
    let table = DiversificationTable::from_grid(w_values, a_values, rows).map_err(to_py)?;
    Ok(diversification::greedy_path(&table).steps.iter().map(|s| (s.w, s.a, s.mu)).collect())
}

type SearchSummary = (BTreeMap<&'static str, f64>, Vec<(f64, Vec<String>)>);

/// Random portfolio search; returns the top-fraction sector allocation and
/// the retained portfolios as `(sharpe, tickers)`.
#[pyfunction]
#[pyo3(signature = (panel, draws=100_000, portfolio_size=40, top_fraction=0.01, seed=0, risk_free_rate=0.0))]
fn run_search(
    py: Python<'_>,
    panel: &Panel,
    draws: usize,
    portfolio_size: usize,
    top_fraction: f64,
    seed: u64,
    risk_free_rate: f64,
) -> PyResult<SearchSummary> {
    let returns = panel.returns()?;
    let config = SearchConfig { n_draws: draws, portfolio_size, top_fraction, risk_free_rate, seed };
    let result = py.detach(|| search::run_search(&returns, &config)).map_err(to_py)?;
    let allocation = crisisdyn::Sector::ALL.iter().map(|&s| (s.name(), result.allocation.get(s))).collect();
    let top = result
        .top
        .iter()
        .map(|p| (p.sharpe, p.members.iter().map(|&j| returns.tickers()[j].clone()).collect()))
        .collect();
    Ok((allocation, top))
}

/// Half-L1 distance between two eleven-sector allocations.
#[pyfunction]
#[pyo3(signature = (p, q, tolerance=1e-9))]
fn allocation_distance(p: Vec<f64>, q: Vec<f64>, tolerance: f64) -> PyResult<f64> {
    let p = SectorAllocation::with_tolerance(p, tolerance).map_err(to_py)?;
    let q = SectorAllocation::with_tolerance(q, tolerance).map_err(to_py)?;
    Ok(search::allocation_distance(&p, &q))
}

/// Adds every binding to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Panel>()?;
    m.add_function(wrap_pyfunction!(load_panel, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(log_returns, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(collectivity_series, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(fit_operator, m)?)?;
    m.add_function(wrap_pyfunction!(mu_table, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_path, m)?)?;
    m.add_function(wrap_pyfunction!(run_search, m)?)?;
    m.add_function(wrap_pyfunction!(allocation_distance, m)?)?;
    m.add("__version__", crisisdyn::VERSION)?;
    Ok(())
}

#[pymodule]
fn pycrisisdyn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
