use serde::{Deserialize, Serialize};

use super::{DiscountCurve, MarketDataError};

/// Spot and continuous carry (repo minus dividend yield) of the underlying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityForwardInputs {
    spot: f64,
    carry: DiscountCurve,
}

impl EquityForwardInputs {
    pub fn new(spot: f64, carry: DiscountCurve) -> Result<Self, MarketDataError> {
        if !(spot > 0.0 && spot.is_finite()) {
            return Err(MarketDataError::invariant("equity", format!("spot must be > 0, got {spot}")));
        }
        Ok(Self { spot, carry })
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn carry(&self) -> &DiscountCurve {
        &self.carry
    }

    pub fn with_spot(&self, spot: f64) -> Result<Self, MarketDataError> {
        Self::new(spot, self.carry.clone())
    }

    pub fn with_carry(&self, carry: DiscountCurve) -> Self {
        Self {
            spot: self.spot,
            carry,
        }
    }

    /// Forward price `S·exp(∫r − ∫q)`.
    pub fn forward_price(&self, discount: &DiscountCurve, t: f64) -> Result<f64, MarketDataError> {
        if !(t >= 0.0) {
            return Err(MarketDataError::Domain(format!("forward at negative time {t}")));
        }
        Ok(self.forward(discount, t))
    }

    #[inline]
    pub(crate) fn forward(&self, discount: &DiscountCurve, t: f64) -> f64 {
        self.spot * (discount.integrated_rate(t) - self.carry.integrated_rate(t)).exp()
    }
}

/// Free-function form of [`EquityForwardInputs::forward_price`].
pub fn forward_price(
    eq: &EquityForwardInputs,
    discount: &DiscountCurve,
    t: f64,
) -> Result<f64, MarketDataError> {
    eq.forward_price(discount, t)
}
