use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::market_data::DiscountCurve;

/// One-factor Hull-White short rate `dr = (θ(t) − a·r)dt + σ dW`, fitted to
/// the initial discount curve.
///
/// Internally `r(t) = φ(t) + x(t)` with `x` a zero-started Ornstein-Uhlenbeck
/// process and `φ(t) = f(0,t) + σ²/(2a²)·(1 − e^{−at})²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullWhiteParams {
    pub mean_reversion: f64,
    pub rate_vol: f64,
}

impl HullWhiteParams {
    pub fn new(mean_reversion: f64, rate_vol: f64) -> Result<Self, EngineError> {
        let p = Self {
            mean_reversion,
            rate_vol,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.mean_reversion > 0.0 && self.mean_reversion.is_finite()) {
            return Err(EngineError::Config(format!(
                "mean reversion must be > 0, got {}",
                self.mean_reversion
            )));
        }
        if !(self.rate_vol >= 0.0 && self.rate_vol.is_finite()) {
            return Err(EngineError::Config(format!("rate vol must be >= 0, got {}", self.rate_vol)));
        }
        Ok(())
    }

    /// `B(t,T) = (1 − e^{−a(T−t)})/a`.
    pub fn b(&self, t: f64, maturity: f64) -> f64 {
        let a = self.mean_reversion;
        (1.0 - (-a * (maturity - t)).exp()) / a
    }

    /// Deterministic shift of the short rate above the instantaneous forward.
    pub fn convexity(&self, t: f64) -> f64 {
        let a = self.mean_reversion;
        let s = self.rate_vol;
        let e = 1.0 - (-a * t).exp();
        s * s / (2.0 * a * a) * e * e
    }

    /// `∫ convexity(s) ds` over `[t0, t1]`.
    pub fn convexity_integral(&self, t0: f64, t1: f64) -> f64 {
        let a = self.mean_reversion;
        let s = self.rate_vol;
        let (e0, e1) = ((-a * t0).exp(), (-a * t1).exp());
        s * s / (2.0 * a * a) * ((t1 - t0) - 2.0 * (e0 - e1) / a + (e0 * e0 - e1 * e1) / (2.0 * a))
    }

    /// Variance term `σ²/(4a)·(1 − e^{−2at})`.
    fn bond_variance_term(&self, t: f64) -> f64 {
        let a = self.mean_reversion;
        self.rate_vol * self.rate_vol / (4.0 * a) * (1.0 - (-2.0 * a * t).exp())
    }

    /// Zero-coupon bond `P(t,T)` given the OU state `x(t)`.
    pub(crate) fn bond_from_state(&self, curve: &DiscountCurve, t: f64, maturity: f64, x: f64) -> f64 {
        let b = self.b(t, maturity);
        let ratio = (curve.integrated_rate(t) - curve.integrated_rate(maturity)).exp();
        ratio * (-b * (x + self.convexity(t)) - self.bond_variance_term(t) * b * b).exp()
    }

    /// Stationary standard deviation of `x` over one step of length `dt`.
    pub(crate) fn step_std(&self, dt: f64) -> f64 {
        let a = self.mean_reversion;
        self.rate_vol * ((1.0 - (-2.0 * a * dt).exp()) / (2.0 * a)).sqrt()
    }
}

/// Affine bond price `P(t,T) = A(t,T)·exp(−B(t,T)·r_t)` with `A` fitted to the
/// input curve.
pub fn hw_discount_bond(
    params: &HullWhiteParams,
    curve: &DiscountCurve,
    t: f64,
    maturity: f64,
    r_t: f64,
) -> Result<f64, EngineError> {
    if !(t >= 0.0) || !(maturity >= t) {
        return Err(EngineError::Domain(format!("bond needs 0 <= t <= T, got t={t}, T={maturity}")));
    }
    if t == maturity {
        return Ok(1.0);
    }
    let b = params.b(t, maturity);
    let ln_a = curve.integrated_rate(t) - curve.integrated_rate(maturity)
        + b * curve.instantaneous_forward(t)
        - params.bond_variance_term(t) * b * b;
    Ok((ln_a - b * r_t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> DiscountCurve {
        DiscountCurve::new(vec![0.5, 1.0, 2.0, 5.0, 10.0], vec![0.004, 0.006, 0.009, 0.015, 0.021]).unwrap()
    }

    #[test]
    fn maturity_identity() {
        let p = HullWhiteParams::new(0.05, 0.008).unwrap();
        assert_eq!(hw_discount_bond(&p, &curve(), 3.0, 3.0, 0.07).unwrap(), 1.0);
    }

    #[test]
    fn fits_initial_curve_at_pillars() {
        let p = HullWhiteParams::new(0.05, 0.008).unwrap();
        let c = curve();
        let r0 = c.instantaneous_forward(0.0);
        for &t in c.pillar_times() {
            let model = hw_discount_bond(&p, &c, 0.0, t, r0).unwrap();
            assert!((model - c.df(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn state_form_agrees_with_short_rate_form() {
        let p = HullWhiteParams::new(0.1, 0.012).unwrap();
        let c = curve();
        let (t, mat, x) = (1.7, 6.2, -0.013);
        let r = c.instantaneous_forward(t) + p.convexity(t) + x;
        let a = hw_discount_bond(&p, &c, t, mat, r).unwrap();
        let b = p.bond_from_state(&c, t, mat, x);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn convexity_integral_matches_quadrature() {
        let p = HullWhiteParams::new(0.07, 0.01).unwrap();
        let (t0, t1) = (0.3, 4.1);
        let n = 20_000;
        let h = (t1 - t0) / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * p.convexity(t0 + h * i as f64)
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((p.convexity_integral(t0, t1) - simpson).abs() < 1e-14);
    }

    #[test]
    fn domain_and_parameter_errors() {
        let p = HullWhiteParams::new(0.05, 0.008).unwrap();
        assert!(hw_discount_bond(&p, &curve(), 2.0, 1.0, 0.0).is_err());
        assert!(HullWhiteParams::new(0.0, 0.01).is_err());
        assert!(HullWhiteParams::new(0.05, -0.01).is_err());
    }
}
