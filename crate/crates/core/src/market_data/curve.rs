use serde::{Deserialize, Serialize};

use super::MarketDataError;

/// Continuously-compounded zero curve.
///
/// Interpolation is linear in `z(t)·t` between pillars (log-linear in the
/// discount factor), so instantaneous forwards are piecewise flat. Outside the
/// pillar range the zero rate is held flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    times: Vec<f64>,
    zero_rates: Vec<f64>,
}

impl DiscountCurve {
    pub fn new(times: Vec<f64>, zero_rates: Vec<f64>) -> Result<Self, MarketDataError> {
        if times.is_empty() {
            return Err(MarketDataError::invariant("curve", "at least one pillar required"));
        }
        if times.len() != zero_rates.len() {
            return Err(MarketDataError::invariant(
                "curve",
                format!("{} pillar times but {} rates", times.len(), zero_rates.len()),
            ));
        }
        if times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(MarketDataError::invariant("curve", "pillar times must be finite and > 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MarketDataError::invariant("curve", "pillar times must be strictly increasing"));
        }
        if zero_rates.iter().any(|z| !z.is_finite()) {
            return Err(MarketDataError::invariant("curve", "zero rates must be finite"));
        }
        Ok(Self { times, zero_rates })
    }

    /// Flat curve at `rate`.
    pub fn flat(rate: f64) -> Self {
        Self {
            times: vec![1.0],
            zero_rates: vec![rate],
        }
    }

    pub fn pillar_times(&self) -> &[f64] {
        &self.times
    }

    pub fn zero_rates(&self) -> &[f64] {
        &self.zero_rates
    }

    /// Integrated rate `z(t)·t`. `t` is assumed non-negative.
    pub fn integrated_rate(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.zero_rates[0] * t;
        }
        if t >= self.times[n - 1] {
            return self.zero_rates[n - 1] * t;
        }
        let i = self.times.partition_point(|&p| p <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (y0, y1) = (self.zero_rates[i] * t0, self.zero_rates[i + 1] * t1);
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    /// Zero rate at `t`; at `t = 0` the first pillar's rate.
    pub fn zero_rate(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            self.zero_rates[0]
        } else {
            self.integrated_rate(t) / t
        }
    }

    /// Instantaneous forward rate, right-continuous at pillars.
    pub fn instantaneous_forward(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t < self.times[0] {
            return self.zero_rates[0];
        }
        if t >= self.times[n - 1] {
            return self.zero_rates[n - 1];
        }
        let i = self.times.partition_point(|&p| p <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        (self.zero_rates[i + 1] * t1 - self.zero_rates[i] * t0) / (t1 - t0)
    }

    pub fn discount_factor(&self, t: f64) -> Result<f64, MarketDataError> {
        if !(t >= 0.0) {
            return Err(MarketDataError::Domain(format!("discount factor at negative time {t}")));
        }
        Ok(self.df(t))
    }

    /// Unchecked discount factor for hot loops; callers guarantee `t >= 0`.
    #[inline]
    pub fn df(&self, t: f64) -> f64 {
        (-self.integrated_rate(t)).exp()
    }

    /// Parallel shift of every zero rate.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            times: self.times.clone(),
            zero_rates: self.zero_rates.iter().map(|z| z + shift).collect(),
        }
    }
}
