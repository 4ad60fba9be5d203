use serde::{Deserialize, Serialize};

use super::{DiscountCurve, EquityForwardInputs, ImpliedVolSurface, MarketDataError, MarketSnapshot};

/// Floor on local variance.
pub const MIN_LOCAL_VARIANCE: f64 = 1e-6;
/// Cap on local volatility.
pub const MAX_LOCAL_VOL: f64 = 5.0;

const MAX_TIME_STEP: f64 = 0.05;
const LOG_MONEYNESS_STEP: f64 = 0.01;

/// Dupire local volatility at `(t, spot_level)`.
///
/// Finite differences on total variance `w(T, y)` with `y = ln(K/F(T))`:
///
/// `σ² = ∂w/∂T / (1 − y/w·∂w/∂y + ¼(−¼ − 1/w + y²/w²)(∂w/∂y)² + ½·∂²w/∂y²)`
pub fn dupire_local_vol(
    surface: &ImpliedVolSurface,
    eq: &EquityForwardInputs,
    discount: &DiscountCurve,
    t: f64,
    spot_level: f64,
) -> Result<f64, MarketDataError> {
    if !(t > 0.0) || !(spot_level > 0.0) {
        return Err(MarketDataError::Domain(format!(
            "local vol needs t > 0 and spot > 0, got ({t}, {spot_level})"
        )));
    }
    let y = (spot_level / eq.forward(discount, t)).ln();
    Ok(dupire_at_log_moneyness(surface, t, y))
}

pub(crate) fn dupire_at_log_moneyness(surface: &ImpliedVolSurface, t: f64, y: f64) -> f64 {
    let w = |tt: f64, yy: f64| surface.total_variance(tt, yy.exp());

    let cell = surface.expiry_cell_width(t).unwrap_or(f64::INFINITY);
    let dt = MAX_TIME_STEP.min(0.5 * cell).min(0.5 * t);
    let dy = LOG_MONEYNESS_STEP;

    let w0 = w(t, y);
    let w_t = (w(t + dt, y) - w(t - dt, y)) / (2.0 * dt);
    let (w_up, w_dn) = (w(t, y + dy), w(t, y - dy));
    let w_y = (w_up - w_dn) / (2.0 * dy);
    let w_yy = (w_up - 2.0 * w0 + w_dn) / (dy * dy);

    let denom = 1.0 - y / w0 * w_y
        + 0.25 * (-0.25 - 1.0 / w0 + y * y / (w0 * w0)) * w_y * w_y
        + 0.5 * w_yy;
    let var = w_t / denom;
    // NaN and negative ratios fall to the floor.
    let var = if var > MIN_LOCAL_VARIANCE { var } else { MIN_LOCAL_VARIANCE };
    var.sqrt().min(MAX_LOCAL_VOL)
}

/// Layout of a (time, log-moneyness) grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub time_step: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub y_step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            time_step: 0.25,
            y_min: -1.6,
            y_max: 1.2,
            y_step: 0.05,
        }
    }
}

/// Volatility tabulated on a uniform grid in time and `y = ln(S/F(t))`.
///
/// Time pillars sit at `time_step·(i+1)`. Evaluation interpolates linearly on
/// both axes and holds values flat outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalVolGrid {
    time_step: f64,
    n_t: usize,
    y_min: f64,
    y_step: f64,
    n_y: usize,
    values: Vec<f64>,
}

impl LocalVolGrid {
    pub fn from_fn(spec: GridSpec, horizon: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let n_t = ((horizon / spec.time_step - 1e-9).ceil() as usize).max(1);
        let n_y = ((spec.y_max - spec.y_min) / spec.y_step).round() as usize + 1;
        let mut values = Vec::with_capacity(n_t * n_y);
        for i in 0..n_t {
            let t = spec.time_step * (i + 1) as f64;
            for j in 0..n_y {
                values.push(f(t, spec.y_min + spec.y_step * j as f64));
            }
        }
        Self {
            time_step: spec.time_step,
            n_t,
            y_min: spec.y_min,
            y_step: spec.y_step,
            n_y,
            values,
        }
    }

    /// Dupire local vol tabulated from a snapshot out to `horizon`.
    pub fn dupire(market: &MarketSnapshot, horizon: f64, spec: GridSpec) -> Self {
        Self::from_fn(spec, horizon, |t, y| dupire_at_log_moneyness(&market.surface, t, y))
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.time_step * (i + 1) as f64).collect()
    }

    pub fn log_moneyness(&self) -> Vec<f64> {
        (0..self.n_y).map(|j| self.y_min + self.y_step * j as f64).collect()
    }

    pub fn n_times(&self) -> usize {
        self.n_t
    }

    pub fn n_log_moneyness(&self) -> usize {
        self.n_y
    }

    pub fn horizon(&self) -> f64 {
        self.time_step * self.n_t as f64
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_y + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n_t {
            for j in 0..self.n_y {
                let k = i * self.n_y + j;
                out.values[k] = f(i, j, self.values[k]);
            }
        }
        out
    }

    #[inline]
    pub fn eval(&self, t: f64, y: f64) -> f64 {
        let (i, a) = frac_index(t / self.time_step - 1.0, self.n_t);
        let (j, b) = frac_index((y - self.y_min) / self.y_step, self.n_y);
        let row = |ii: usize| {
            let base = ii * self.n_y;
            if b == 0.0 {
                self.values[base + j]
            } else {
                (1.0 - b) * self.values[base + j] + b * self.values[base + j + 1]
            }
        };
        if a == 0.0 {
            row(i)
        } else {
            (1.0 - a) * row(i) + a * row(i + 1)
        }
    }
}

#[inline]
fn frac_index(x: f64, n: usize) -> (usize, f64) {
    if !(x > 0.0) {
        return (0, 0.0);
    }
    let last = (n - 1) as f64;
    if x >= last {
        return (n - 1, 0.0);
    }
    let i = x.floor();
    (i as usize, x - i)
}
