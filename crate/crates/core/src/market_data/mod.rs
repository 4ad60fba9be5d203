//! Market data containers: zero curves, equity forwards, implied vol surfaces,
//! Dupire local volatility and the JSON snapshot format.

mod curve;
mod equity;
mod local_vol;
mod snapshot;
mod surface;

pub use curve::DiscountCurve;
pub use equity::{forward_price, EquityForwardInputs};
pub use local_vol::{dupire_local_vol, GridSpec, LocalVolGrid, MAX_LOCAL_VOL, MIN_LOCAL_VARIANCE};
pub use snapshot::{load_snapshot, write_snapshot, MarketSnapshot};
pub use surface::{implied_vol, ImpliedVolSurface};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketDataError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("snapshot parse error: {0}")]
    Parse(String),
    #[error("invariant violated ({field}): {message}")]
    Invariant { field: String, message: String },
    #[error("calendar arbitrage: total variance decreases at moneyness {moneyness} before expiry {expiry}")]
    CalendarArbitrage { moneyness: f64, expiry: f64 },
}

impl MarketDataError {
    pub(crate) fn invariant(field: &str, message: impl Into<String>) -> Self {
        Self::Invariant {
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn in_context(self, field: &str) -> Self {
        match self {
            Self::Invariant { message, .. } => Self::Invariant {
                field: field.to_string(),
                message,
            },
            other => other,
        }
    }
}
