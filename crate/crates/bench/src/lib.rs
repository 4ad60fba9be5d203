//! Shared inputs for the criterion benches.

use std::path::Path;

use mrisk_core::market_data::{load_snapshot, MarketSnapshot};

pub fn shipped_snapshot() -> MarketSnapshot {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/market_snapshot.json");
    load_snapshot(path).expect("shipped snapshot loads")
}
