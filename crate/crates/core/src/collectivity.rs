//! Log returns, rolling correlation matrices and their normalised spectra.
//!
//! Time indices follow the returns axis and are 1-based: the window ending
//! at `t` covers returns `t - S + 1 ..= t`, and rolling quantities are
//! defined for `t = S ..= T`.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::distribution_align::EmpiricalDistribution;
use crate::market_data::{CrisisWindow, PricePanel, Sector};
use crate::{Error, Result};

/// Default rolling window length.
pub const DEFAULT_WINDOW: usize = 60;

/// Eigenvalues in `(-PSD_TOLERANCE, 0)` are rounded to zero; anything lower
/// is reported as a PSD violation.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Daily log returns, `T x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    sectors: Vec<Sector>,
    returns: DMatrix<f64>,
}

impl ReturnPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        sectors: Vec<Sector>,
        returns: DMatrix<f64>,
    ) -> Result<Self> {
        if returns.nrows() != dates.len() || returns.ncols() != tickers.len() || sectors.len() != tickers.len() {
            return Err(Error::Config("return panel dimensions disagree".into()));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::Numerical("non-finite log return".into()));
        }
        Ok(Self { dates, tickers, sectors, returns })
    }

    /// Date of each return (the later of the two prices).
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    pub fn returns(&self) -> &DMatrix<f64> {
        &self.returns
    }

    /// Number of return observations `T`.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// The `S x N` block of returns `t - S + 1 ..= t`, each column shifted to
    /// mean 0 and scaled to sample standard deviation 1.
    pub fn standardize_window(&self, t: usize, window: usize) -> Result<DMatrix<f64>> {
        check_window(self.len(), t, window)?;
        let mut block = self.returns.rows(t - window, window).into_owned();
        for (j, mut col) in block.column_iter_mut().enumerate() {
            if is_constant(col.as_slice()) {
                return Err(Error::DegenerateAsset { ticker: self.tickers[j].clone(), t });
            }
            let m = col.mean();
            col.add_scalar_mut(-m);
            let sd = (col.norm_squared() / (window - 1) as f64).sqrt();
            col /= sd;
        }
        Ok(block)
    }

    /// All pooled returns of the given columns.
    pub fn pooled(&self, columns: &[usize]) -> Vec<f64> {
        columns.iter().flat_map(|&j| self.returns.column(j).iter().copied().collect::<Vec<_>>()).collect()
    }
}

fn check_window(len: usize, t: usize, window: usize) -> Result<()> {
    if window < 2 {
        return Err(Error::Config(format!("window length {window} < 2")));
    }
    if t < window || t > len {
        return Err(Error::InsufficientData(format!(
            "window ending at t={t} of length {window} does not fit in {len} returns"
        )));
    }
    Ok(())
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// `R_i(t) = ln(p_i(t) / p_i(t-1))`; the first date is dropped.
pub fn log_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    let total = panel.n_dates();
    if total < 2 {
        return Err(Error::InsufficientData(format!("{total} price rows; need at least 2 for returns")));
    }
    let p = panel.prices();
    let returns = DMatrix::from_fn(total - 1, panel.n_assets(), |i, j| (p[(i + 1, j)] / p[(i, j)]).ln());
    ReturnPanel::new(
        panel.dates()[1..].to_vec(),
        panel.tickers().to_vec(),
        panel.sectors().to_vec(),
        returns,
    )
}

/// A symmetric correlation matrix tagged with the window end `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub t: usize,
    values: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Checks unit diagonal, symmetry and the `[-1, 1]` range.
    pub fn new(t: usize, values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n || n == 0 {
            return Err(Error::Config("correlation matrix must be square and nonempty".into()));
        }
        for i in 0..n {
            if (values[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(Error::Numerical(format!("diagonal entry {i} is {}", values[(i, i)])));
            }
            for j in 0..i {
                let v = values[(i, j)];
                if !(-1.0..=1.0).contains(&v) || v != values[(j, i)] {
                    return Err(Error::Numerical(format!("entry ({i},{j}) = {v} is not a valid correlation")));
                }
            }
        }
        Ok(Self { t, values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

/// Pearson correlation of the columns of `x` (rows are observations).
///
/// Equals `(1/(S-1)) Z^T Z` for the column-standardised block `Z`. Returns
/// the index of the first constant column as the error.
pub(crate) fn pearson(x: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, usize> {
    let (rows, n) = x.shape();
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        if is_constant(col.as_slice()) {
            return Err(j);
        }
        let m = col.sum() / rows as f64;
        col.add_scalar_mut(-m);
    }
    let norms: Vec<f64> = centered.column_iter().map(|c| c.norm()).collect();
    let mut corr = DMatrix::identity(n, n);
    for i in 0..n {
        let ci = centered.column(i);
        for j in 0..i {
            let v = (ci.dot(&centered.column(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            corr[(i, j)] = v;
            corr[(j, i)] = v;
        }
    }
    Ok(corr)
}

fn window_correlation(returns: &ReturnPanel, t: usize, window: usize) -> Result<DMatrix<f64>> {
    let block = returns.returns.rows(t - window, window).into_owned();
    pearson(&block).map_err(|j| Error::DegenerateAsset { ticker: returns.tickers[j].clone(), t })
}

/// One correlation matrix per window end `t = S ..= T`.
pub fn rolling_correlation(returns: &ReturnPanel, window: usize) -> Result<Vec<CorrelationMatrix>> {
    check_window(returns.len(), returns.len(), window)?;
    (window..=returns.len())
        .into_par_iter()
        .map(|t| Ok(CorrelationMatrix { t, values: window_correlation(returns, t, window)? }))
        .collect()
}

/// Eigenvalues sorted descending, divided by their sum.
pub fn normalized_spectrum(values: &DMatrix<f64>) -> Result<Vec<f64>> {
    let mut eig: Vec<f64> = values.clone().symmetric_eigenvalues().iter().copied().collect();
    for e in eig.iter_mut() {
        if !e.is_finite() {
            return Err(Error::Numerical("eigensolver produced a non-finite eigenvalue".into()));
        }
        if *e < -PSD_TOLERANCE {
            return Err(Error::Numerical(format!("matrix is not positive semidefinite (eigenvalue {e:e})")));
        }
        if *e < 0.0 {
            *e = 0.0;
        }
    }
    eig.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = eig.iter().sum();
    if total <= 0.0 {
        return Err(Error::Numerical("eigenvalues sum to zero".into()));
    }
    Ok(eig.into_iter().map(|e| e / total).collect())
}

pub fn eigen_spectrum(matrix: &CorrelationMatrix) -> Result<Vec<f64>> {
    normalized_spectrum(&matrix.values)
}

/// Normalised leading eigenvalue `λ̃₁` of a correlation matrix.
pub fn leading_collectivity(values: &DMatrix<f64>) -> Result<f64> {
    Ok(normalized_spectrum(values)?[0])
}

/// Normalised spectra of the rolling correlation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectivitySeries {
    /// Window ends `t = S ..= T`.
    pub timestamps: Vec<usize>,
    pub dates: Vec<NaiveDate>,
    pub spectra: Vec<Vec<f64>>,
}

impl CollectivitySeries {
    pub fn leading(&self) -> Vec<f64> {
        self.spectra.iter().map(|s| s[0]).collect()
    }
}

pub fn collectivity_series(returns: &ReturnPanel, window: usize) -> Result<CollectivitySeries> {
    check_window(returns.len(), returns.len(), window)?;
    let timestamps: Vec<usize> = (window..=returns.len()).collect();
    let spectra = timestamps
        .par_iter()
        .map(|&t| normalized_spectrum(&window_correlation(returns, t, window)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CollectivitySeries {
        dates: timestamps.iter().map(|&t| returns.dates[t - 1]).collect(),
        timestamps,
        spectra,
    })
}

/// Steps between full recomputations of the rolling sums.
const RESYNC_EVERY: usize = 64;

/// Relative residual `‖Av - θv‖ / θ` at which power iteration stops.
const POWER_TOLERANCE: f64 = 1e-11;

const POWER_MAX_ITERATIONS: usize = 2000;

/// Leading eigenvalue of a symmetric PSD matrix (row-major, `n x n`) by
/// power iteration from `start`, which is overwritten with the eigenvector.
/// Falls back to a full symmetric eigensolve if iteration does not converge.
pub(crate) fn leading_eigenvalue(matrix: &[f64], n: usize, start: &mut [f64]) -> f64 {
    let mut next = vec![0.0; n];
    let norm = start.iter().map(|x| x * x).sum::<f64>().sqrt();
    start.iter_mut().for_each(|x| *x /= norm);
    for _ in 0..POWER_MAX_ITERATIONS {
        for (i, out) in next.iter_mut().enumerate() {
            let row = &matrix[i * n..(i + 1) * n];
            *out = row.iter().zip(start.iter()).map(|(a, v)| a * v).sum();
        }
        let theta: f64 = next.iter().zip(start.iter()).map(|(a, b)| a * b).sum();
        let wnorm2: f64 = next.iter().map(|x| x * x).sum();
        let resid2 = (wnorm2 - theta * theta).max(0.0);
        let wnorm = wnorm2.sqrt();
        for (v, w) in start.iter_mut().zip(&next) {
            *v = w / wnorm;
        }
        if resid2 <= (POWER_TOLERANCE * theta).powi(2) {
            return theta;
        }
    }
    let full = DMatrix::from_row_slice(n, n, matrix);
    full.symmetric_eigenvalues().max()
}

/// `λ̃₁(t)` for `t = S ..= T` of the sub-panel formed by `columns`.
///
/// Correlations come from rolling sums of returns and cross-products, and
/// `λ̃₁` from power iteration warm-started at the previous window's leading
/// eigenvector. Returns the offending column on a zero-variance window.
pub(crate) fn leading_series(
    returns: &DMatrix<f64>,
    columns: &[usize],
    window: usize,
) -> std::result::Result<Vec<f64>, LeadingSeriesError> {
    let n = columns.len();
    let len = returns.nrows();
    let cols: Vec<&[f64]> = columns
        .iter()
        .map(|&j| &returns.as_slice()[j * len..(j + 1) * len])
        .collect();
    // Length of the run of equal values ending at each row.
    let runs: Vec<Vec<usize>> = cols
        .iter()
        .map(|c| {
            let mut run = vec![1usize; len];
            for i in 1..len {
                if c[i] == c[i - 1] {
                    run[i] = run[i - 1] + 1;
                }
            }
            run
        })
        .collect();

    let s = window as f64;
    let mut sum = vec![0.0; n];
    let mut cross = vec![0.0; n * n];
    let mut corr = vec![0.0; n * n];
    let mut vector = vec![1.0; n];
    let mut out = Vec::with_capacity(len + 1 - window);
    for t in window..=len {
        if (t - window).is_multiple_of(RESYNC_EVERY) {
            sum.iter_mut().for_each(|x| *x = 0.0);
            cross.iter_mut().for_each(|x| *x = 0.0);
            for row in (t - window)..t {
                for i in 0..n {
                    let xi = cols[i][row];
                    sum[i] += xi;
                    for k in 0..=i {
                        cross[i * n + k] += xi * cols[k][row];
                    }
                }
            }
        } else {
            let (old, new) = (t - window - 1, t - 1);
            for i in 0..n {
                let (xo, xn) = (cols[i][old], cols[i][new]);
                sum[i] += xn - xo;
                for k in 0..=i {
                    cross[i * n + k] += xn * cols[k][new] - xo * cols[k][old];
                }
            }
        }
        if let Some(i) = (0..n).find(|&i| runs[i][t - 1] >= window) {
            return Err(LeadingSeriesError::Degenerate { column: columns[i], t });
        }
        let var: Vec<f64> = (0..n).map(|i| cross[i * n + i] - sum[i] * sum[i] / s).collect();
        if let Some(i) = (0..n).find(|&i| !(var[i] > 0.0)) {
            return Err(LeadingSeriesError::Numerical(Error::Numerical(format!(
                "column {} has nonpositive rolling variance {} at t={t}",
                columns[i], var[i]
            ))));
        }
        for i in 0..n {
            corr[i * n + i] = 1.0;
            for k in 0..i {
                let c = ((cross[i * n + k] - sum[i] * sum[k] / s) / (var[i] * var[k]).sqrt()).clamp(-1.0, 1.0);
                corr[i * n + k] = c;
                corr[k * n + i] = c;
            }
        }
        let lambda = leading_eigenvalue(&corr, n, &mut vector);
        out.push((lambda / n as f64).clamp(1.0 / n as f64, 1.0));
    }
    Ok(out)
}

#[derive(Debug)]
pub(crate) enum LeadingSeriesError {
    Degenerate { column: usize, t: usize },
    Numerical(Error),
}

/// Upper-triangle Pearson coefficients of full-window log returns.
pub fn correlation_distribution(panel: &PricePanel, window: &CrisisWindow) -> Result<EmpiricalDistribution> {
    let slice = panel.slice_window(window)?;
    if slice.n_dates() < 3 {
        return Err(Error::InsufficientData(format!(
            "window {} has {} dates; need at least 3",
            window.name,
            slice.n_dates()
        )));
    }
    if slice.n_assets() < 2 {
        return Err(Error::InsufficientData("need at least 2 assets for correlations".into()));
    }
    let returns = log_returns(&slice)?;
    let corr = window_correlation(&returns, returns.len(), returns.len())?;
    let n = corr.nrows();
    let coeffs: Vec<f64> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| corr[(i, j)]).collect();
    EmpiricalDistribution::new(coeffs)
}
