use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "crisisdyn", version, about = "Collective dynamics and diversification of equities across market crises")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Pairwise correlation distribution per crisis window.
    Corrdist(CorrdistArgs),
    /// Rolling normalised eigenvalue series.
    Collectivity(CollectivityArgs),
    /// Diversification table, greedy path and marginals.
    Divpath(DivpathArgs),
    /// Affine alignment of crisis return distributions and sector clustering.
    Align(AlignArgs),
    /// Random portfolio search and top-fraction sector allocation.
    Search(SearchArgs),
    /// Allocation distances between crises and the index.
    Matrix(MatrixArgs),
    /// Synthetic factor-model panel.
    Synth(SynthArgs),
    /// Re-run a command recorded in a run manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Corrdist(_) => "corrdist",
            Command::Collectivity(_) => "collectivity",
            Command::Divpath(_) => "divpath",
            Command::Align(_) => "align",
            Command::Search(_) => "search",
            Command::Matrix(_) => "matrix",
            Command::Synth(_) => "synth",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PanelArgs {
    /// Long-format price CSV: date,ticker,close.
    #[arg(long)]
    pub prices: PathBuf,
    /// Sector CSV: ticker,sector.
    #[arg(long)]
    pub sectors: PathBuf,
    /// Crisis window TOML; the built-in windows are used when omitted.
    #[arg(long)]
    pub crises: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrdistArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Crisis name; repeat for several. Defaults to every configured window.
    #[arg(long)]
    pub crisis: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CollectivityArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Restrict to one crisis window; the whole panel otherwise.
    #[arg(long)]
    pub crisis: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub window: usize,
    /// Number of leading eigenvalues to write.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DivpathArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub crisis: Option<String>,
    #[arg(long, default_value_t = 60)]
    pub window: usize,
    /// Random portfolios per cell.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    /// Largest equities-per-sector count.
    #[arg(long, default_value_t = 9)]
    pub w_max: usize,
    /// Largest sector count.
    #[arg(long, default_value_t = 9)]
    pub a_max: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AlignArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub crisis: Vec<String>,
    /// Crisis whose scale the others are mapped onto.
    #[arg(long, default_value = "GFC")]
    pub reference: String,
    /// average or complete.
    #[arg(long, default_value = "average")]
    pub linkage: String,
    /// Fit and compare with the order-2 distance instead.
    #[arg(long)]
    pub order2: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Random portfolios drawn.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    /// Equities per portfolio.
    #[arg(long, default_value_t = 40)]
    pub portfolio_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub top_fraction: f64,
    /// Daily risk-free rate subtracted in the Sharpe ratio.
    #[arg(long, default_value_t = 0.0)]
    pub risk_free: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub crisis: Option<String>,
    #[command(flatten)]
    pub search: SearchOptions,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub crisis: Vec<String>,
    #[command(flatten)]
    pub search: SearchOptions,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Factor model TOML.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output price and sector CSVs, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub out: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
