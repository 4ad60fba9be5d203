//! Model-risk quantification for equity autocallables.
//!
//! Prices under a Dupire local-volatility model and a Hull-White + local
//! volatility hybrid, measures fair value adjustments several ways, softens
//! payoffs, and keeps a model inventory with an audit trail.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod market_data;
pub mod black;
pub mod engine;
pub mod fva;
pub mod governance;
pub mod products;

pub use engine::{price, McConfig, ModelKind, ModelSpec, PriceResult};
pub use market_data::MarketSnapshot;
pub use products::Product;
