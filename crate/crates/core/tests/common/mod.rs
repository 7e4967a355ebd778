#![allow(dead_code)]

use chrono::NaiveDate;
use crisisdyn::collectivity::{log_returns, ReturnPanel};
use crisisdyn::diversification::DiversificationTable;
use crisisdyn::synthetic::{generate, FactorModelSpec};
use crisisdyn::PricePanel;

/// Published mean median collectivity grids; rows are sector counts a = 2..9,
/// columns equities per sector w = 2..9.
pub const DOTCOM: [[f64; 8]; 8] = [
    [0.435, 0.375, 0.354, 0.344, 0.332, 0.331, 0.308, 0.305],
    [0.341, 0.320, 0.294, 0.290, 0.284, 0.280, 0.268, 0.274],
    [0.311, 0.289, 0.271, 0.265, 0.259, 0.252, 0.252, 0.251],
    [0.290, 0.268, 0.255, 0.253, 0.243, 0.237, 0.240, 0.239],
    [0.271, 0.256, 0.248, 0.240, 0.236, 0.231, 0.228, 0.228],
    [0.262, 0.247, 0.237, 0.234, 0.231, 0.230, 0.224, 0.226],
    [0.248, 0.240, 0.232, 0.228, 0.223, 0.225, 0.222, 0.223],
    [0.242, 0.232, 0.228, 0.221, 0.221, 0.220, 0.218, 0.216],
];

/// Cells marked on the dot-com grid, as (w, a).
pub const DOTCOM_RED: [(usize, usize); 11] = [
    (2, 2), (2, 3), (2, 4), (3, 4), (3, 5), (4, 5), (4, 6), (4, 7), (4, 8), (5, 8), (5, 9),
];

pub const UKRAINE: [[f64; 8]; 8] = [
    [0.512, 0.489, 0.467, 0.473, 0.469, 0.466, 0.447, 0.444],
    [0.457, 0.414, 0.425, 0.420, 0.411, 0.408, 0.405, 0.399],
    [0.433, 0.402, 0.393, 0.395, 0.393, 0.381, 0.377, 0.379],
    [0.408, 0.370, 0.376, 0.373, 0.363, 0.363, 0.372, 0.364],
    [0.392, 0.370, 0.365, 0.368, 0.368, 0.364, 0.353, 0.357],
    [0.391, 0.369, 0.364, 0.359, 0.365, 0.360, 0.355, 0.359],
    [0.382, 0.361, 0.351, 0.353, 0.353, 0.350, 0.353, 0.348],
    [0.378, 0.361, 0.358, 0.351, 0.351, 0.346, 0.352, 0.346],
];

pub fn table(grid: &[[f64; 8]; 8]) -> DiversificationTable {
    let axis: Vec<usize> = (2..=9).collect();
    DiversificationTable::from_grid(axis.clone(), axis, grid.iter().map(|r| r.to_vec()).collect()).unwrap()
}

/// Sector allocation columns in universe order, percent.
pub const ALLOC_COVID: [f64; 11] = [3.8, 3.9, 4.3, 5.5, 6.1, 9.7, 10.3, 11.2, 14.8, 15.0, 15.4];
pub const ALLOC_DOTCOM: [f64; 11] = [2.7, 5.1, 6.0, 6.9, 7.5, 8.2, 9.1, 12.7, 13.5, 13.6, 14.5];
pub const ALLOC_GFC: [f64; 11] = [2.4, 5.1, 5.4, 6.4, 6.5, 8.4, 8.9, 12.7, 13.9, 14.5, 16.0];
pub const ALLOC_UKRAINE: [f64; 11] = [2.6, 6.0, 6.4, 8.3, 8.6, 9.1, 10.2, 11.5, 11.9, 12.3, 13.1];
pub const ALLOC_INDEX: [f64; 11] = [15.1, 14.1, 13.1, 12.7, 11.5, 6.6, 6.2, 5.8, 5.6, 5.2, 4.2];

/// Published columns are rounded to 0.1%; sums are within 0.3% of 100.
pub const ROUNDED_COLUMN_TOLERANCE: f64 = 0.005;

pub fn factor_panel(
    n_sectors: usize,
    per_sector: usize,
    days: usize,
    market_beta: f64,
    sector_beta: f64,
    idio_sigma: f64,
    seed: u64,
) -> PricePanel {
    let mut spec = FactorModelSpec::new(n_sectors, per_sector, days);
    spec.market_beta = market_beta;
    spec.sector_beta = sector_beta;
    spec.idio_sigma = idio_sigma;
    spec.seed = seed;
    generate(&spec).unwrap()
}

pub fn factor_returns(
    n_sectors: usize,
    per_sector: usize,
    days: usize,
    market_beta: f64,
    sector_beta: f64,
    idio_sigma: f64,
    seed: u64,
) -> ReturnPanel {
    log_returns(&factor_panel(n_sectors, per_sector, days, market_beta, sector_beta, idio_sigma, seed)).unwrap()
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}
