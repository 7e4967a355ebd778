//! Price panels, sector labels and crisis windows.

mod crisis;
mod io;
mod panel;
mod sector;

pub use crisis::{default_crises, find_crisis, load_crises, parse_crises, CrisisWindow};
pub use io::{load_panel, read_prices, read_sectors, write_panel, DroppedTicker, LoadedPanel};
pub use panel::PricePanel;
pub use sector::{Sector, SectorUniverse, UnknownSector};

/// Restricts `panel` to the dates inside `window`.
pub fn slice_window(panel: &PricePanel, window: &CrisisWindow) -> crate::Result<PricePanel> {
    panel.slice_window(window)
}
