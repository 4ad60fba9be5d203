use serde::{Deserialize, Serialize};

use super::{calibrate_leverage, EngineError, LeverageMode, LeverageSurface, McConfig, ModelKind, ModelSpec, Simulator};
use crate::market_data::{GridSpec, LocalVolGrid, MarketSnapshot};
use crate::products::Product;

/// Monte Carlo price per unit notional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl PriceResult {
    pub fn bp(&self) -> f64 {
        self.value * 1e4
    }
}

/// Discounted value of every path, kept so that differences between runs on
/// common random numbers can be measured pathwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PathValues {
    values: Vec<f64>,
    antithetic: bool,
}

impl PathValues {
    pub fn new(values: Vec<f64>, antithetic: bool) -> Self {
        Self { values, antithetic }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_antithetic(&self) -> bool {
        self.antithetic
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Standard error of the mean. Antithetic pairs are averaged first so the
    /// estimate sees the pair as one independent sample.
    pub fn std_error(&self) -> f64 {
        let units: Vec<f64> = if self.antithetic {
            self.values.chunks(2).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
        } else {
            self.values.clone()
        };
        let n = units.len();
        if n < 2 {
            return 0.0;
        }
        let mean = units.iter().sum::<f64>() / n as f64;
        let var = units.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    }

    pub fn result(&self) -> PriceResult {
        PriceResult {
            value: self.mean(),
            std_error: self.std_error(),
            n_paths: self.values.len(),
        }
    }

    /// Pathwise `self − other`; both must come from the same path layout.
    pub fn difference(&self, other: &PathValues) -> PathValues {
        assert_eq!(self.values.len(), other.values.len(), "path counts differ");
        PathValues {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            antithetic: self.antithetic,
        }
    }
}

/// Fills in the hybrid leverage if the spec needs one and lacks it.
pub fn prepare_model(
    model: &ModelSpec,
    market: &MarketSnapshot,
    horizon: f64,
    config: &McConfig,
) -> Result<ModelSpec, EngineError> {
    model.validate()?;
    if model.kind == ModelKind::Lv || model.leverage.is_some() {
        return Ok(model.clone());
    }
    let hw = model.hw.expect("validated");
    let leverage = match model.leverage_mode {
        LeverageMode::Recalibrate => {
            calibrate_leverage(market, &hw, model.equity_rate_correlation, config, horizon)?
        }
        LeverageMode::ReuseLocalVol => LeverageSurface {
            grid: LocalVolGrid::dupire(market, horizon, GridSpec::default()),
            mode: LeverageMode::ReuseLocalVol,
            sweeps: 0,
            converged: true,
            warnings: Vec::new(),
        },
    };
    Ok(model.clone().with_leverage(leverage))
}

/// Drops any leverage and prepares again, for a market or parameter that
/// differs from the one the leverage was fitted to.
pub fn reprepare_model(
    model: &ModelSpec,
    market: &MarketSnapshot,
    horizon: f64,
    config: &McConfig,
) -> Result<ModelSpec, EngineError> {
    let mut m = model.clone();
    m.leverage = None;
    prepare_model(&m, market, horizon, config)
}

/// Mean discounted cashflow of `product` per unit notional.
pub fn price(
    product: &Product,
    model: &ModelSpec,
    market: &MarketSnapshot,
    config: &McConfig,
) -> Result<PriceResult, EngineError> {
    Ok(price_paths(product, model, market, config, None)?.result())
}

/// Per-path discounted values. `reference_spot` fixes the level product
/// returns are measured against; it defaults to the market spot.
pub fn price_paths(
    product: &Product,
    model: &ModelSpec,
    market: &MarketSnapshot,
    config: &McConfig,
    reference_spot: Option<f64>,
) -> Result<PathValues, EngineError> {
    let sim = Simulator::new(model, market, product.horizon(), *config)?;
    let bound = product.bind(sim.times(), reference_spot.unwrap_or(market.spot()))?;
    let values = sim.map_paths(|p| bound.present_value(p));
    Ok(PathValues::new(values, config.antithetic))
}
