use serde::{Deserialize, Serialize};

use super::Product;
use crate::engine::{prepare_model, price_paths, reprepare_model, EngineError, McConfig, ModelSpec, PathValues, PriceResult};
use crate::market_data::MarketSnapshot;

/// Finite-difference bump sizes: relative spot, absolute vol, absolute
/// correlation. A correlation bump is only meaningful for HWLV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bumps {
    pub spot: f64,
    pub vol: f64,
    #[serde(default)]
    pub correlation: Option<f64>,
}

impl Default for Bumps {
    fn default() -> Self {
        Self {
            spot: 0.01,
            vol: 0.01,
            correlation: None,
        }
    }
}

impl Bumps {
    /// Defaults, with the correlation bump switched on for hybrid models.
    pub fn for_model(model: &ModelSpec) -> Self {
        Self {
            correlation: model.is_hybrid().then_some(0.05),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        let sizes = [Some(self.spot), Some(self.vol), self.correlation];
        if sizes.iter().flatten().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(EngineError::Config(format!("bump sizes must be > 0: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Greek {
    pub value: f64,
    pub std_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spot_bump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vol_bump: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation_bump: Option<f64>,
}

impl Greek {
    fn from_paths(values: PathValues, spot_bump: Option<f64>, vol_bump: Option<f64>, correlation_bump: Option<f64>) -> Self {
        Self {
            value: values.mean(),
            std_error: values.std_error(),
            spot_bump,
            vol_bump,
            correlation_bump,
        }
    }
}

/// Sensitivities per unit notional. Delta and gamma are taken against the
/// return `S / S_ref`, vega and vanna against an absolute vol of 1.0 (100 vol
/// points), correlation sensitivity against a correlation change of 1.0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreeksReport {
    pub price: PriceResult,
    pub delta: Greek,
    pub gamma: Greek,
    pub vega: Greek,
    pub vanna: Greek,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlation_sensitivity: Option<Greek>,
}

fn combine(parts: &[(&PathValues, f64)]) -> PathValues {
    let (first, _) = parts[0];
    let mut out = vec![0.0; first.values().len()];
    for (pv, w) in parts {
        for (o, v) in out.iter_mut().zip(pv.values()) {
            *o += w * v;
        }
    }
    PathValues::new(out, first.is_antithetic())
}

/// Central bump-and-revalue greeks on common random numbers. Returns stay
/// measured against the unbumped spot; spot-bumped HWLV runs keep the base
/// leverage, which is quoted in forward moneyness and so does not move.
pub fn greeks(
    product: &Product,
    model: &ModelSpec,
    market: &MarketSnapshot,
    config: &McConfig,
    bumps: &Bumps,
) -> Result<GreeksReport, EngineError> {
    bumps.validate()?;
    if bumps.correlation.is_some() && !model.is_hybrid() {
        return Err(EngineError::UnsupportedMetric(
            "correlation sensitivity is only defined for HWLV".into(),
        ));
    }
    let horizon = product.horizon();
    let reference = market.spot();
    let run = |m: &ModelSpec, mk: &MarketSnapshot| price_paths(product, m, mk, config, Some(reference));
    let spot_bumped = |mk: &MarketSnapshot, sign: f64| -> Result<MarketSnapshot, EngineError> {
        let mut out = mk.clone();
        out.equity = mk.equity.with_spot(mk.spot() * (1.0 + sign * bumps.spot))?;
        Ok(out)
    };
    let vol_bumped = |sign: f64| -> Result<(ModelSpec, MarketSnapshot), EngineError> {
        let mut mk = market.clone();
        mk.surface = market.surface.shifted(sign * bumps.vol)?;
        let m = if model.is_hybrid() {
            reprepare_model(model, &mk, horizon, config)?
        } else {
            model.clone()
        };
        Ok((m, mk))
    };

    let base_model = prepare_model(model, market, horizon, config)?;
    let v0 = run(&base_model, market)?;
    let s_up = run(&base_model, &spot_bumped(market, 1.0)?)?;
    let s_dn = run(&base_model, &spot_bumped(market, -1.0)?)?;
    let (m_up, mk_up) = vol_bumped(1.0)?;
    let (m_dn, mk_dn) = vol_bumped(-1.0)?;
    let v_up = run(&m_up, &mk_up)?;
    let v_dn = run(&m_dn, &mk_dn)?;
    let uu = run(&m_up, &spot_bumped(&mk_up, 1.0)?)?;
    let du = run(&m_up, &spot_bumped(&mk_up, -1.0)?)?;
    let ud = run(&m_dn, &spot_bumped(&mk_dn, 1.0)?)?;
    let dd = run(&m_dn, &spot_bumped(&mk_dn, -1.0)?)?;

    let (h, b) = (bumps.spot, bumps.vol);
    let delta = combine(&[(&s_up, 0.5 / h), (&s_dn, -0.5 / h)]);
    let gamma = combine(&[(&s_up, 1.0 / (h * h)), (&v0, -2.0 / (h * h)), (&s_dn, 1.0 / (h * h))]);
    let vega = combine(&[(&v_up, 0.5 / b), (&v_dn, -0.5 / b)]);
    let w = 0.25 / (h * b);
    let vanna = combine(&[(&uu, w), (&du, -w), (&ud, -w), (&dd, w)]);

    let correlation_sensitivity = match bumps.correlation {
        None => None,
        Some(c) => {
            let rho = model.equity_rate_correlation;
            let (lo, hi) = ((rho - c).max(-1.0), (rho + c).min(1.0));
            let at = |r: f64| -> Result<PathValues, EngineError> {
                let mut m = model.clone();
                m.equity_rate_correlation = r;
                let m = reprepare_model(&m, market, horizon, config)?;
                run(&m, market)
            };
            let (p_hi, p_lo) = (at(hi)?, at(lo)?);
            let span = hi - lo;
            Some(Greek::from_paths(
                combine(&[(&p_hi, 1.0 / span), (&p_lo, -1.0 / span)]),
                None,
                None,
                Some(c),
            ))
        }
    };

    Ok(GreeksReport {
        price: v0.result(),
        delta: Greek::from_paths(delta, Some(h), None, None),
        gamma: Greek::from_paths(gamma, Some(h), None, None),
        vega: Greek::from_paths(vega, None, Some(b), None),
        vanna: Greek::from_paths(vanna, Some(h), Some(b), None),
        correlation_sensitivity,
    })
}
