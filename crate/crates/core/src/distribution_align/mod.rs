//! Wasserstein distances between return distributions, affine alignment of
//! crises onto a reference crisis, and clustering of the aligned sectors.

mod align;
mod cluster;
mod operator;
mod wasserstein;

pub use align::{align_and_cluster, align_and_cluster_with, AlignedDistanceMatrix, CrisisOperator, Order, SectorLabel};
pub use cluster::{cluster, Dendrogram, DendrogramNode, Linkage, Merge};
pub use operator::{
    apply_operator, fit_operator, fit_operator_w2, AffineOperator, OperatorFit, MIN_SCALE, SCALE_TOLERANCE,
};
pub use wasserstein::{
    wasserstein1, wasserstein1_on_grid, wasserstein2, EmpiricalDistribution, QUANTILE_GRID,
};
