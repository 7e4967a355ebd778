use crate::stats::quantile_sorted;
use crate::{Error, Result};

/// Number of midpoint quantiles used to discretise `W₁`.
pub const QUANTILE_GRID: usize = 1000;

/// A sorted finite sample viewed through its quantile function.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    sample: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InsufficientData("empty sample".into()));
        }
        if sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("sample contains a non-finite value".into()));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self { sample })
    }

    pub fn sample(&self) -> &[f64] {
        &self.sample
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    pub fn mean(&self) -> f64 {
        crate::stats::mean(&self.sample)
    }

    pub fn min(&self) -> f64 {
        self.sample[0]
    }

    pub fn max(&self) -> f64 {
        self.sample[self.sample.len() - 1]
    }

    /// True when every observation is equal.
    pub fn is_point_mass(&self) -> bool {
        self.min() == self.max()
    }

    /// Linear interpolation of order statistics at position `u (n - 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        quantile_sorted(&self.sample, u)
    }

    /// Quantiles at the midpoints `(j - 1/2) / m`, `j = 1..=m`.
    pub fn quantile_grid(&self, m: usize) -> Vec<f64> {
        (1..=m).map(|j| self.quantile((j as f64 - 0.5) / m as f64)).collect()
    }

    pub fn interquartile_range(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }
}

/// `W₁` on the default quantile grid.
pub fn wasserstein1(f: &EmpiricalDistribution, g: &EmpiricalDistribution) -> f64 {
    wasserstein1_on_grid(f, g, QUANTILE_GRID)
}

/// Mean absolute difference of the two quantile functions over `m` midpoints.
pub fn wasserstein1_on_grid(f: &EmpiricalDistribution, g: &EmpiricalDistribution, m: usize) -> f64 {
    let qf = f.quantile_grid(m);
    let qg = g.quantile_grid(m);
    grid_distance(&qf, &qg)
}

pub(crate) fn grid_distance(qf: &[f64], qg: &[f64]) -> f64 {
    qf.iter().zip(qg).map(|(a, b)| (a - b).abs()).sum::<f64>() / qf.len() as f64
}

/// Order-2 distance on the default grid, for cross-checks.
pub fn wasserstein2(f: &EmpiricalDistribution, g: &EmpiricalDistribution) -> f64 {
    let qf = f.quantile_grid(QUANTILE_GRID);
    let qg = g.quantile_grid(QUANTILE_GRID);
    (qf.iter().zip(&qg).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / QUANTILE_GRID as f64).sqrt()
}
