use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{DiscountCurve, EquityForwardInputs, ImpliedVolSurface, MarketDataError};

/// Everything the pricer reads from the market.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSnapshot {
    pub as_of: NaiveDate,
    pub discount: DiscountCurve,
    pub equity: EquityForwardInputs,
    pub surface: ImpliedVolSurface,
    pub equity_rate_correlation: f64,
}

impl MarketSnapshot {
    pub fn new(
        as_of: NaiveDate,
        discount: DiscountCurve,
        equity: EquityForwardInputs,
        surface: ImpliedVolSurface,
        equity_rate_correlation: f64,
    ) -> Result<Self, MarketDataError> {
        if !(-1.0..=1.0).contains(&equity_rate_correlation) {
            return Err(MarketDataError::invariant(
                "equity_rate_correlation",
                format!("{equity_rate_correlation} outside [-1, 1]"),
            ));
        }
        Ok(Self {
            as_of,
            discount,
            equity,
            surface,
            equity_rate_correlation,
        })
    }

    /// Flat test market: constant rate, carry and vol.
    pub fn flat(spot: f64, rate: f64, carry: f64, vol: f64) -> Self {
        Self {
            as_of: NaiveDate::from_ymd_opt(2012, 6, 10).expect("valid date"),
            discount: DiscountCurve::flat(rate),
            equity: EquityForwardInputs::new(spot, DiscountCurve::flat(carry)).expect("spot > 0"),
            surface: ImpliedVolSurface::flat(vol),
            equity_rate_correlation: 0.0,
        }
    }

    pub fn spot(&self) -> f64 {
        self.equity.spot()
    }

    pub fn forward(&self, t: f64) -> f64 {
        self.equity.forward(&self.discount, t)
    }

    pub fn from_json(text: &str) -> Result<Self, MarketDataError> {
        let file: SnapshotFile = serde_json::from_str(text).map_err(|e| MarketDataError::Parse(e.to_string()))?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SnapshotFile::from(self)).expect("snapshot serialises")
    }
}

/// Reads and validates a snapshot file.
pub fn load_snapshot(path: impl AsRef<Path>) -> Result<MarketSnapshot, MarketDataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| MarketDataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    MarketSnapshot::from_json(&text)
}

pub fn write_snapshot(snapshot: &MarketSnapshot, path: impl AsRef<Path>) -> Result<(), MarketDataError> {
    let path = path.as_ref();
    std::fs::write(path, snapshot.to_json()).map_err(|e| MarketDataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    as_of: NaiveDate,
    discount: CurveFile,
    equity: EquityFile,
    surface: SurfaceFile,
    equity_rate_correlation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CurveFile {
    times: Vec<f64>,
    zero_rates: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EquityFile {
    spot: f64,
    carry_times: Vec<f64>,
    carry_rates: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SurfaceFile {
    expiries: Vec<f64>,
    moneyness: Vec<f64>,
    /// Row-major: one row of moneyness pillars per expiry.
    vols: Vec<f64>,
}

impl TryFrom<SnapshotFile> for MarketSnapshot {
    type Error = MarketDataError;

    fn try_from(f: SnapshotFile) -> Result<Self, Self::Error> {
        let discount = DiscountCurve::new(f.discount.times, f.discount.zero_rates)?;
        let carry = DiscountCurve::new(f.equity.carry_times, f.equity.carry_rates)
            .map_err(|e| e.in_context("equity carry"))?;
        let equity = EquityForwardInputs::new(f.equity.spot, carry)?;
        let n_k = f.surface.moneyness.len();
        if n_k == 0 || f.surface.vols.len() != f.surface.expiries.len() * n_k {
            return Err(MarketDataError::invariant(
                "surface",
                format!(
                    "vols has {} entries, expected {} x {}",
                    f.surface.vols.len(),
                    f.surface.expiries.len(),
                    n_k
                ),
            ));
        }
        let rows = f.surface.vols.chunks(n_k).map(<[f64]>::to_vec).collect();
        let surface = ImpliedVolSurface::new(f.surface.expiries, f.surface.moneyness, rows)?;
        MarketSnapshot::new(f.as_of, discount, equity, surface, f.equity_rate_correlation)
    }
}

impl From<&MarketSnapshot> for SnapshotFile {
    fn from(s: &MarketSnapshot) -> Self {
        Self {
            as_of: s.as_of,
            discount: CurveFile {
                times: s.discount.pillar_times().to_vec(),
                zero_rates: s.discount.zero_rates().to_vec(),
            },
            equity: EquityFile {
                spot: s.equity.spot(),
                carry_times: s.equity.carry().pillar_times().to_vec(),
                carry_rates: s.equity.carry().zero_rates().to_vec(),
            },
            surface: SurfaceFile {
                expiries: s.surface.expiries().to_vec(),
                moneyness: s.surface.moneyness().to_vec(),
                vols: s.surface.vols().iter().flatten().copied().collect(),
            },
            equity_rate_correlation: s.equity_rate_correlation,
            description: None,
        }
    }
}
