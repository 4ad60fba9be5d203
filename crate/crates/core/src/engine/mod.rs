//! Path simulation and pricing under LV and the Hull-White + local volatility
//! hybrid.

mod hull_white;
mod leverage;
mod model;
mod paths;
mod pricer;

pub use hull_white::{hw_discount_bond, HullWhiteParams};
pub use leverage::{calibrate_leverage, MAX_SWEEPS, MIN_BIN_PATHS};
pub use model::{LeverageMode, LeverageSurface, McConfig, ModelKind, ModelSpec};
pub use paths::{simulate_paths, PathSet, PathView};
pub(crate) use paths::Simulator;
pub use pricer::{prepare_model, price, price_paths, reprepare_model, PathValues, PriceResult};

use thiserror::Error;

use crate::market_data::MarketDataError;
use crate::products::ProductError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("configuration error: HWLV model has no leverage surface; calibrate or prepare it first")]
    MissingLeverage,
    #[error("horizon mismatch: {0}")]
    Horizon(String),
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),
    #[error(transparent)]
    Market(#[from] MarketDataError),
    #[error(transparent)]
    Product(#[from] ProductError),
}
