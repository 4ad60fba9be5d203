use serde::{Deserialize, Serialize};

use super::options::positive;
use super::{grid_index, soften, BoundProduct, PayoffProfile, PiecewiseLinear, ProductError, SofteningPolicy};
use crate::engine::PathView;

/// Floating coupons paid by the holder on every period while the deal lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloatingLeg {
    pub enabled: bool,
    #[serde(default)]
    pub spread: f64,
}

impl Default for FloatingLeg {
    fn default() -> Self {
        Self {
            enabled: true,
            spread: 0.0,
        }
    }
}

/// Autocallable note on a single underlying.
///
/// On each observation date the deal redeems at `redemption + i × coupon_step`
/// once the return reaches `autocall_barrier`. Held to maturity, the holder
/// gets `redemption − max(short_put_strike − x, 0) − digital_leverage ×
/// 1{x < digital_strike}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AutocallableFile")]
pub struct Autocallable {
    pub notional: f64,
    pub observation_dates: Vec<f64>,
    pub autocall_barrier: f64,
    pub coupon_step: f64,
    pub redemption: f64,
    pub short_put_strike: f64,
    pub digital_strike: f64,
    pub digital_leverage: f64,
    pub floating_leg: FloatingLeg,
    /// Returns are measured from the spot at this date.
    pub start_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub softening: Option<SofteningPolicy>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AutocallableFile {
    #[serde(default = "one")]
    notional: f64,
    #[serde(default)]
    observation_dates: Option<Vec<f64>>,
    #[serde(default)]
    maturity_years: Option<u32>,
    #[serde(default = "one")]
    autocall_barrier: f64,
    #[serde(default = "default_coupon_step")]
    coupon_step: f64,
    #[serde(default = "one")]
    redemption: f64,
    #[serde(default = "half")]
    short_put_strike: f64,
    #[serde(default = "half")]
    digital_strike: f64,
    #[serde(default = "half")]
    digital_leverage: f64,
    #[serde(default)]
    floating_leg: FloatingLeg,
    #[serde(default)]
    start_time: f64,
    #[serde(default)]
    softening: Option<SofteningPolicy>,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_coupon_step() -> f64 {
    0.05
}

impl TryFrom<AutocallableFile> for Autocallable {
    type Error = ProductError;

    fn try_from(f: AutocallableFile) -> Result<Self, Self::Error> {
        let observation_dates = match (f.observation_dates, f.maturity_years) {
            (Some(d), None) => d,
            (None, Some(m)) => yearly_dates(f.start_time, m),
            (Some(_), Some(_)) => {
                return Err(ProductError::Invalid(
                    "give either observation_dates or maturity_years, not both".into(),
                ))
            }
            (None, None) => {
                return Err(ProductError::Invalid(
                    "observation_dates or maturity_years is required".into(),
                ))
            }
        };
        let a = Self {
            notional: f.notional,
            observation_dates,
            autocall_barrier: f.autocall_barrier,
            coupon_step: f.coupon_step,
            redemption: f.redemption,
            short_put_strike: f.short_put_strike,
            digital_strike: f.digital_strike,
            digital_leverage: f.digital_leverage,
            floating_leg: f.floating_leg,
            start_time: f.start_time,
            softening: f.softening,
        };
        a.validate()?;
        Ok(a)
    }
}

fn yearly_dates(start: f64, years: u32) -> Vec<f64> {
    (1..=years).map(|i| start + i as f64).collect()
}

impl Autocallable {
    /// Yearly observations over `years` with the standard terms and a
    /// floating leg at zero spread.
    pub fn standard(years: u32) -> Result<Self, ProductError> {
        let a = Self {
            notional: 1.0,
            observation_dates: yearly_dates(0.0, years),
            autocall_barrier: 1.0,
            coupon_step: 0.05,
            redemption: 1.0,
            short_put_strike: 0.5,
            digital_strike: 0.5,
            digital_leverage: 0.5,
            floating_leg: FloatingLeg::default(),
            start_time: 0.0,
            softening: None,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn with_floating_leg(mut self, enabled: bool, spread: f64) -> Self {
        self.floating_leg = FloatingLeg { enabled, spread };
        self
    }

    pub fn with_softening(mut self, policy: SofteningPolicy) -> Self {
        self.softening = Some(policy);
        self
    }

    pub fn maturity(&self) -> f64 {
        self.observation_dates.last().copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        positive("notional", self.notional)?;
        positive("autocall_barrier", self.autocall_barrier)?;
        positive("short_put_strike", self.short_put_strike)?;
        positive("digital_strike", self.digital_strike)?;
        if !(self.digital_leverage >= 0.0 && self.digital_leverage.is_finite()) {
            return Err(ProductError::Invalid(format!(
                "digital_leverage must be ≥ 0, got {}",
                self.digital_leverage
            )));
        }
        if !(self.coupon_step >= 0.0 && self.coupon_step.is_finite()) {
            return Err(ProductError::Invalid(format!("coupon_step must be ≥ 0, got {}", self.coupon_step)));
        }
        if !self.redemption.is_finite() || !self.floating_leg.spread.is_finite() {
            return Err(ProductError::Invalid("redemption and spread must be finite".into()));
        }
        if self.short_put_strike > self.autocall_barrier || self.digital_strike > self.autocall_barrier {
            return Err(ProductError::Invalid("put and digital strikes must not exceed the autocall barrier".into()));
        }
        if !(self.start_time >= 0.0) {
            return Err(ProductError::Invalid(format!("start_time must be ≥ 0, got {}", self.start_time)));
        }
        let first = *self
            .observation_dates
            .first()
            .ok_or_else(|| ProductError::Invalid("no observation dates".into()))?;
        if first <= self.start_time || self.observation_dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ProductError::Invalid(
                "observation dates must be strictly increasing and after start_time".into(),
            ));
        }
        self.softening.map_or(Ok(()), |p| p.validate())
    }

    /// Holder's payoff at maturity as a function of the return, including the
    /// final autocall.
    pub fn maturity_profile(&self) -> PiecewiseLinear {
        let base = PiecewiseLinear::constant(self.redemption)
            .plus(&PiecewiseLinear::put(self.short_put_strike).scaled(-1.0))
            .plus(&PiecewiseLinear::digital_put(self.digital_strike, self.digital_leverage).scaled(-1.0));
        if self.autocall_barrier.is_finite() {
            let n = self.observation_dates.len() as f64;
            base.plus(&PiecewiseLinear::digital_call(self.autocall_barrier, n * self.coupon_step))
        } else {
            base
        }
    }

    pub(crate) fn bind(&self, times: &[f64], reference_spot: f64) -> Result<BoundProduct, ProductError> {
        let obs_steps = self
            .observation_dates
            .iter()
            .map(|&t| grid_index(times, t))
            .collect::<Result<Vec<_>, _>>()?;
        let start_step = grid_index(times, self.start_time)?;
        let mut prev_steps = vec![start_step];
        prev_steps.extend_from_slice(&obs_steps[..obs_steps.len() - 1]);
        let mut prev_times = vec![self.start_time];
        prev_times.extend_from_slice(&self.observation_dates[..obs_steps.len() - 1]);
        let profile = PayoffProfile::from(self.maturity_profile());
        Ok(BoundProduct::Autocall(BoundAutocall {
            obs_times: self.observation_dates.clone(),
            accruals: self.observation_dates.iter().zip(&prev_times).map(|(t, p)| t - p).collect(),
            obs_steps,
            prev_steps,
            start_step: (self.start_time > 0.0).then_some(start_step),
            reference: reference_spot,
            barrier: self.autocall_barrier,
            call_amounts: (1..=self.observation_dates.len())
                .map(|i| self.redemption + i as f64 * self.coupon_step)
                .collect(),
            floating_spread: self.floating_leg.enabled.then_some(self.floating_leg.spread),
            maturity: match &self.softening {
                Some(p) => soften(&profile, p),
                None => profile,
            },
        }))
    }
}

#[derive(Debug, Clone)]
pub struct BoundAutocall {
    obs_steps: Vec<usize>,
    obs_times: Vec<f64>,
    prev_steps: Vec<usize>,
    accruals: Vec<f64>,
    start_step: Option<usize>,
    reference: f64,
    barrier: f64,
    call_amounts: Vec<f64>,
    floating_spread: Option<f64>,
    maturity: PayoffProfile,
}

impl BoundAutocall {
    pub(crate) fn last_step(&self) -> usize {
        *self.obs_steps.last().expect("validated")
    }

    pub(crate) fn visit<F: FnMut(usize, f64)>(&self, path: &PathView, mut pay: F) {
        let reference = self.start_step.map_or(self.reference, |s| path.spot[s]);
        let last = self.obs_steps.len() - 1;
        for (i, &step) in self.obs_steps.iter().enumerate() {
            if let Some(spread) = self.floating_spread {
                pay(step, -floating_coupon(path, self.prev_steps[i], self.obs_times[i], self.accruals[i], spread));
            }
            let x = path.spot[step] / reference;
            if i == last {
                pay(step, self.maturity.value(x));
            } else if x >= self.barrier {
                pay(step, self.call_amounts[i]);
                return;
            }
        }
    }
}

/// Simple-compounded rate fixed at the period start on the path, plus spread,
/// times the accrual.
fn floating_coupon(path: &PathView, fixing_step: usize, pay_time: f64, accrual: f64, spread: f64) -> f64 {
    1.0 / path.bond(fixing_step, pay_time) - 1.0 + spread * accrual
}

/// Holder's cashflows `(time, amount)` on one path, scaled by the notional.
/// Returns are measured from the path's first spot.
pub fn autocall_cashflows(path: &PathView, product: &Autocallable) -> Result<Vec<(f64, f64)>, ProductError> {
    let bound = product.bind(path.times, path.spot[0])?;
    Ok(bound
        .cashflows(path)
        .into_iter()
        .map(|c| (c.time, c.amount * product.notional))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::DiscountCurve;

    fn path_with(curve: &DiscountCurve, times: &[f64], spot: &[f64], discount: &[f64], f: impl FnOnce(&PathView)) {
        let view = PathView {
            times,
            spot,
            discount,
            rate_state: None,
            curve,
            hw: None,
        };
        f(&view);
    }

    fn fixed() -> Autocallable {
        Autocallable::standard(5).unwrap().with_floating_leg(false, 0.0)
    }

    #[test]
    fn called_at_first_observation() {
        let curve = DiscountCurve::flat(0.0);
        let times = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let spot = [100.0, 110.0, 50.0, 50.0, 50.0, 50.0];
        path_with(&curve, &times, &spot, &[1.0; 6], |p| {
            let cf = autocall_cashflows(p, &fixed()).unwrap();
            assert_eq!(cf.len(), 1);
            assert_eq!(cf[0].0, 1.0);
            assert!((cf[0].1 - 1.05).abs() < 1e-15);
        });
    }

    #[test]
    fn maturity_below_both_strikes() {
        let curve = DiscountCurve::flat(0.0);
        let times = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let spot = [100.0, 90.0, 80.0, 70.0, 60.0, 40.0];
        path_with(&curve, &times, &spot, &[1.0; 6], |p| {
            let cf = autocall_cashflows(p, &fixed()).unwrap();
            assert_eq!(cf.len(), 1);
            assert_eq!(cf[0].0, 5.0);
            assert!((cf[0].1 - 0.4).abs() < 1e-15);
        });
    }

    #[test]
    fn digital_boundary_is_strict() {
        let curve = DiscountCurve::flat(0.0);
        let times = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let spot = [100.0, 90.0, 80.0, 70.0, 60.0, 50.0];
        path_with(&curve, &times, &spot, &[1.0; 6], |p| {
            let cf = autocall_cashflows(p, &fixed()).unwrap();
            assert_eq!(cf, vec![(5.0, 1.0)]);
        });
    }

    #[test]
    fn floating_coupons_paid_by_holder_while_alive() {
        let curve = DiscountCurve::flat(0.02);
        let times = [0.0, 1.0, 2.0, 3.0];
        let spot = [100.0, 90.0, 120.0, 130.0];
        let product = Autocallable::standard(3).unwrap().with_floating_leg(true, 0.01);
        path_with(&curve, &times, &spot, &[1.0; 4], |p| {
            let cf = autocall_cashflows(p, &product).unwrap();
            let coupon = -(0.02f64.exp() - 1.0 + 0.01);
            assert_eq!(cf.len(), 3);
            assert!((cf[0].1 - coupon).abs() < 1e-14);
            assert!((cf[1].1 - coupon).abs() < 1e-14);
            assert!((cf[2].1 - 1.10).abs() < 1e-14);
            assert_eq!(cf[2].0, 2.0);
        });
    }

    #[test]
    fn off_grid_dates_are_rejected() {
        let curve = DiscountCurve::flat(0.0);
        let times = [0.0, 0.7, 1.4];
        let spot = [100.0; 3];
        path_with(&curve, &times, &spot, &[1.0; 3], |p| {
            let err = autocall_cashflows(p, &Autocallable::standard(1).unwrap()).unwrap_err();
            assert!(matches!(err, ProductError::GridMisalignment(_)));
        });
    }

    #[test]
    fn file_defaults_and_maturity_years() {
        let a: Autocallable = serde_json::from_str(r#"{"maturity_years": 3}"#).unwrap();
        assert_eq!(a.observation_dates, vec![1.0, 2.0, 3.0]);
        assert_eq!(a.coupon_step, 0.05);
        assert_eq!(a.digital_leverage, 0.5);
        assert!(a.floating_leg.enabled);
        let echoed: Autocallable = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(echoed, a);
    }

    #[test]
    fn invalid_terms_are_rejected() {
        assert!(serde_json::from_str::<Autocallable>(r#"{"observation_dates": [2, 1]}"#).is_err());
        assert!(serde_json::from_str::<Autocallable>(r#"{"maturity_years": 2, "coupon_step": -0.1}"#).is_err());
        assert!(serde_json::from_str::<Autocallable>(r#"{}"#).is_err());
    }
}
