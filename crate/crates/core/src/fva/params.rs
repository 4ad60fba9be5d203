use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FvaError;
use crate::engine::{EngineError, HullWhiteParams, ModelSpec};
use crate::market_data::MarketSnapshot;

/// Pricer input that FVA methods can move.
///
/// Curve-like inputs (dividend yield, volatility, rate level) are moved by a
/// parallel shift; their level is read at the product horizon (at the money
/// for volatility).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    EquityRateCorrelation,
    DividendYield,
    Spot,
    Volatility,
    RateLevel,
    RateVol,
    MeanReversion,
}

impl Parameter {
    pub const ALL: [Parameter; 7] = [
        Self::EquityRateCorrelation,
        Self::DividendYield,
        Self::Spot,
        Self::Volatility,
        Self::RateLevel,
        Self::RateVol,
        Self::MeanReversion,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::EquityRateCorrelation => "equity_rate_correlation",
            Self::DividendYield => "dividend_yield",
            Self::Spot => "spot",
            Self::Volatility => "volatility",
            Self::RateLevel => "rate_level",
            Self::RateVol => "rate_vol",
            Self::MeanReversion => "mean_reversion",
        }
    }

    /// Whether moving this input invalidates a calibrated leverage surface.
    pub(crate) fn moves_leverage(&self) -> bool {
        !matches!(self, Self::Spot)
    }

    fn hw(model: &ModelSpec, p: Parameter) -> Result<HullWhiteParams, FvaError> {
        match (model.is_hybrid(), model.hw) {
            (true, Some(hw)) => Ok(hw),
            _ => Err(FvaError::UnknownParameter(format!("{} is only defined for HWLV", p.name()))),
        }
    }

    /// Current level of the input.
    pub fn base_value(&self, model: &ModelSpec, market: &MarketSnapshot, horizon: f64) -> Result<f64, FvaError> {
        Ok(match self {
            Self::EquityRateCorrelation => {
                Self::hw(model, *self)?;
                model.equity_rate_correlation
            }
            Self::DividendYield => market.equity.carry().zero_rate(horizon),
            Self::Spot => market.spot(),
            Self::Volatility => market.surface.implied_vol(horizon, 1.0).map_err(EngineError::from)?,
            Self::RateLevel => market.discount.zero_rate(horizon),
            Self::RateVol => Self::hw(model, *self)?.rate_vol,
            Self::MeanReversion => Self::hw(model, *self)?.mean_reversion,
        })
    }

    /// Model and market with the input moved to `value`. Any leverage on the
    /// model is kept; callers decide whether it needs refitting.
    pub fn apply(
        &self,
        model: &ModelSpec,
        market: &MarketSnapshot,
        horizon: f64,
        value: f64,
    ) -> Result<(ModelSpec, MarketSnapshot), FvaError> {
        if !value.is_finite() {
            return Err(FvaError::InvalidInput(format!("{} value must be finite", self.name())));
        }
        let shift = value - self.base_value(model, market, horizon)?;
        let mut m = model.clone();
        let mut mk = market.clone();
        match self {
            Self::EquityRateCorrelation => {
                if !(-1.0..=1.0).contains(&value) {
                    return Err(FvaError::InvalidInput(format!("correlation {value} outside [-1, 1]")));
                }
                m.equity_rate_correlation = value;
            }
            Self::DividendYield => {
                mk.equity = market.equity.with_carry(market.equity.carry().shifted(shift));
            }
            Self::Spot => {
                mk.equity = market.equity.with_spot(value).map_err(EngineError::from)?;
            }
            Self::Volatility => {
                mk.surface = market.surface.shifted(shift).map_err(EngineError::from)?;
            }
            Self::RateLevel => mk.discount = market.discount.shifted(shift),
            Self::RateVol => {
                let hw = Self::hw(model, *self)?;
                m.hw = Some(HullWhiteParams::new(hw.mean_reversion, value)?);
            }
            Self::MeanReversion => {
                let hw = Self::hw(model, *self)?;
                m.hw = Some(HullWhiteParams::new(value, hw.rate_vol)?);
            }
        }
        Ok((m, mk))
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parameter {
    type Err = FvaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| FvaError::UnknownParameter(s.to_string()))
    }
}

/// Historical observations of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSample {
    pub name: String,
    pub samples: Vec<f64>,
}

impl ParameterSample {
    pub fn new(name: impl Into<String>, samples: Vec<f64>) -> Result<Self, FvaError> {
        let s = Self {
            name: name.into(),
            samples,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn parameter(&self) -> Result<Parameter, FvaError> {
        self.name.parse()
    }

    pub fn validate(&self) -> Result<Parameter, FvaError> {
        let p = self.parameter()?;
        if self.samples.len() < 2 {
            return Err(FvaError::InsufficientSamples(self.samples.len()));
        }
        if self.samples.iter().any(|v| !v.is_finite()) {
            return Err(FvaError::InvalidInput(format!("{} samples must be finite", self.name)));
        }
        Ok(p)
    }

    /// Quantile with linear interpolation between order statistics.
    pub fn quantile(&self, p: f64) -> f64 {
        quantile(&self.samples, p)
    }
}

/// Linear-interpolation quantile of unsorted data; `p` in [0, 1].
pub fn quantile(data: &[f64], p: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates_order_statistics() {
        let d = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&d, 0.0), 1.0);
        assert_eq!(quantile(&d, 1.0), 5.0);
        assert_eq!(quantile(&d, 0.5), 3.0);
        assert!((quantile(&d, 0.05) - 1.2).abs() < 1e-12);
        assert!((quantile(&d, 0.95) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn names_round_trip() {
        for p in Parameter::ALL {
            assert_eq!(p.name().parse::<Parameter>().unwrap(), p);
        }
        assert!(matches!("vol_of_vol".parse::<Parameter>(), Err(FvaError::UnknownParameter(_))));
    }

    #[test]
    fn shifts_land_on_target_level() {
        let market = MarketSnapshot::flat(100.0, 0.01, 0.03, 0.2);
        let model = ModelSpec::hwlv(HullWhiteParams::new(0.05, 0.01).unwrap(), 0.3);
        for (p, v) in [
            (Parameter::DividendYield, 0.02),
            (Parameter::Volatility, 0.25),
            (Parameter::RateLevel, 0.0),
            (Parameter::Spot, 110.0),
            (Parameter::RateVol, 0.004),
            (Parameter::EquityRateCorrelation, -0.2),
        ] {
            let (m, mk) = p.apply(&model, &market, 5.0, v).unwrap();
            assert!((p.base_value(&m, &mk, 5.0).unwrap() - v).abs() < 1e-12, "{p}");
        }
        assert!(Parameter::RateVol.base_value(&ModelSpec::lv(), &market, 1.0).is_err());
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            ParameterSample::new("spot", vec![1.0]),
            Err(FvaError::InsufficientSamples(1))
        ));
    }
}
