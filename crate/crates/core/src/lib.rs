//! Collective dynamics of equity panels during market crises.
//!
//! The crate is organised around the analyses it supports:
//!
//! - [`market_data`]: price/sector ingestion, crisis windows.
//! - [`collectivity`]: log returns, rolling correlation matrices and their
//!   normalised eigenvalue spectra.
//! - [`diversification`]: the `(w, a)` sampling experiment producing mean
//!   median collectivity grids, greedy paths and marginal averages.
//! - [`distribution_align`]: 1-D Wasserstein distances, affine operator
//!   fitting and clustering of crisis-normalised sector distributions.
//! - [`portfolio_search`]: random equal-weight portfolios ranked by Sharpe
//!   ratio and the sector allocation of the best performers.
//! - [`synthetic`]: factor-model price panels with known structure.

pub mod collectivity;
pub mod distribution_align;
pub mod diversification;
mod error;
pub mod market_data;
pub mod portfolio_search;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
pub use market_data::{CrisisWindow, PricePanel, Sector};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
