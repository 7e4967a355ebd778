use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{cluster, fit_operator, fit_operator_w2, wasserstein1, wasserstein2};
use super::{AffineOperator, Dendrogram, EmpiricalDistribution, Linkage, OperatorFit};
use crate::collectivity::log_returns;
use crate::market_data::{find_crisis, CrisisWindow, PricePanel, Sector};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SectorLabel {
    pub crisis: String,
    pub sector: Sector,
}

impl std::fmt::Display for SectorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} / {}", self.crisis, self.sector)
    }
}

/// The operator mapping one crisis onto the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrisisOperator {
    pub crisis: String,
    pub fit: OperatorFit,
}

/// Pairwise distances between crisis-normalised sector distributions.
#[derive(Debug, Clone)]
pub struct AlignedDistanceMatrix {
    pub labels: Vec<SectorLabel>,
    pub distances: DMatrix<f64>,
    pub dendrogram: Dendrogram,
    pub operators: Vec<CrisisOperator>,
    /// `(crisis, sector)` cells without enough returns to form a distribution.
    pub omitted: Vec<SectorLabel>,
}

/// Which Wasserstein order drives the fit and the distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    #[default]
    One,
    Two,
}

/// Maps every sector of every crisis onto the `reference` crisis and
/// clusters the adjusted distributions.
///
/// For each crisis the pooled daily log returns of all equities are fitted
/// against the reference pool; the reference itself gets the identity. Each
/// sector pool is pushed through its crisis operator, then all adjusted
/// distributions are compared pairwise and clustered.
pub fn align_and_cluster(
    panel: &PricePanel,
    crises: &[CrisisWindow],
    reference: &str,
    linkage: Linkage,
) -> Result<AlignedDistanceMatrix> {
    align_and_cluster_with(panel, crises, reference, linkage, Order::One)
}

pub fn align_and_cluster_with(
    panel: &PricePanel,
    crises: &[CrisisWindow],
    reference: &str,
    linkage: Linkage,
    order: Order,
) -> Result<AlignedDistanceMatrix> {
    let reference = find_crisis(crises, reference)?.name.clone();
    let sector_columns: Vec<Vec<usize>> = Sector::ALL
        .iter()
        .map(|s| (0..panel.n_assets()).filter(|&j| panel.sectors()[j] == *s).collect())
        .collect();

    let returns = crises
        .iter()
        .map(|c| log_returns(&panel.slice_window(c)?))
        .collect::<Result<Vec<_>>>()?;
    let pools = returns
        .iter()
        .map(|r| EmpiricalDistribution::new(r.returns().iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    let ref_idx = crises.iter().position(|c| c.name == reference).expect("reference resolved above");

    let mut operators = Vec::with_capacity(crises.len());
    for (i, crisis) in crises.iter().enumerate() {
        let fit = if i == ref_idx {
            OperatorFit { operator: AffineOperator::IDENTITY, residual: 0.0, scale_identified: true }
        } else {
            match order {
                Order::One => fit_operator(&pools[i], &pools[ref_idx])?,
                Order::Two => fit_operator_w2(&pools[i], &pools[ref_idx])?,
            }
        };
        operators.push(CrisisOperator { crisis: crisis.name.clone(), fit });
    }

    let mut labels = Vec::new();
    let mut adjusted = Vec::new();
    let mut omitted = Vec::new();
    for (i, crisis) in crises.iter().enumerate() {
        for (sector, cols) in Sector::ALL.iter().zip(&sector_columns) {
            let label = SectorLabel { crisis: crisis.name.clone(), sector: *sector };
            let pooled = returns[i].pooled(cols);
            if pooled.len() < 2 {
                omitted.push(label);
                continue;
            }
            let dist = EmpiricalDistribution::new(pooled)?;
            adjusted.push(operators[i].fit.operator.apply(&dist));
            labels.push(label);
        }
    }
    for label in &omitted {
        log::info!("align: omitting {label} (fewer than 2 returns)");
    }

    let n = adjusted.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| match order {
            Order::One => wasserstein1(&adjusted[i], &adjusted[j]),
            Order::Two => wasserstein2(&adjusted[i], &adjusted[j]),
        })
        .collect();
    let mut distances = DMatrix::zeros(n, n);
    for (&(i, j), &d) in pairs.iter().zip(&values) {
        distances[(i, j)] = d;
        distances[(j, i)] = d;
    }
    let dendrogram = cluster(&distances, linkage)?;
    Ok(AlignedDistanceMatrix { labels, distances, dendrogram, operators, omitted })
}
