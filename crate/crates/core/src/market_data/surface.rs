use serde::{Deserialize, Serialize};

use super::MarketDataError;

/// Implied volatility grid over (expiry, strike/forward).
///
/// Interpolation is bilinear in total variance: linear in expiry at fixed
/// moneyness and linear in moneyness at fixed expiry. Vols are held flat
/// outside the grid on both axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedVolSurface {
    expiries: Vec<f64>,
    moneyness: Vec<f64>,
    /// Row per expiry.
    vols: Vec<Vec<f64>>,
}

pub const MAX_VOL: f64 = 5.0;

impl ImpliedVolSurface {
    pub fn new(
        expiries: Vec<f64>,
        moneyness: Vec<f64>,
        vols: Vec<Vec<f64>>,
    ) -> Result<Self, MarketDataError> {
        let inv = |msg: String| MarketDataError::invariant("surface", msg);
        if expiries.is_empty() || moneyness.len() < 2 {
            return Err(inv("need at least one expiry and two moneyness pillars".into()));
        }
        if expiries.iter().any(|t| !(*t > 0.0) || !t.is_finite())
            || expiries.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(inv("expiries must be positive and strictly increasing".into()));
        }
        if moneyness.iter().any(|k| !(*k > 0.0) || !k.is_finite())
            || moneyness.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(inv("moneyness pillars must be positive and strictly increasing".into()));
        }
        if moneyness[0] > 0.5 || moneyness[moneyness.len() - 1] < 1.5 {
            return Err(inv(format!(
                "moneyness pillars must span [0.5, 1.5], got [{}, {}]",
                moneyness[0],
                moneyness[moneyness.len() - 1]
            )));
        }
        if vols.len() != expiries.len() || vols.iter().any(|row| row.len() != moneyness.len()) {
            return Err(inv("vol matrix shape does not match pillars".into()));
        }
        for row in &vols {
            if let Some(v) = row.iter().find(|v| !(**v > 0.0 && **v <= MAX_VOL)) {
                return Err(inv(format!("vol {v} outside (0, {MAX_VOL}]")));
            }
        }
        for j in 0..moneyness.len() {
            for i in 1..expiries.len() {
                let w0 = vols[i - 1][j] * vols[i - 1][j] * expiries[i - 1];
                let w1 = vols[i][j] * vols[i][j] * expiries[i];
                if w1 < w0 {
                    return Err(MarketDataError::CalendarArbitrage {
                        moneyness: moneyness[j],
                        expiry: expiries[i],
                    });
                }
            }
        }
        Ok(Self {
            expiries,
            moneyness,
            vols,
        })
    }

    pub fn flat(vol: f64) -> Self {
        Self::new(
            vec![1.0],
            vec![0.5, 1.5],
            vec![vec![vol, vol]],
        )
        .expect("flat surface with valid vol")
    }

    pub fn expiries(&self) -> &[f64] {
        &self.expiries
    }

    pub fn moneyness(&self) -> &[f64] {
        &self.moneyness
    }

    pub fn vols(&self) -> &[Vec<f64>] {
        &self.vols
    }

    pub fn is_flat(&self) -> bool {
        let v0 = self.vols[0][0];
        self.vols.iter().flatten().all(|v| *v == v0)
    }

    /// Additive shift of every vol, floored just above zero.
    pub fn shifted(&self, shift: f64) -> Result<Self, MarketDataError> {
        let vols = self
            .vols
            .iter()
            .map(|row| row.iter().map(|v| (v + shift).max(1e-4)).collect())
            .collect();
        Self::new(self.expiries.clone(), self.moneyness.clone(), vols)
    }

    pub fn implied_vol(&self, t: f64, moneyness: f64) -> Result<f64, MarketDataError> {
        if !(t > 0.0) || !(moneyness > 0.0) {
            return Err(MarketDataError::Domain(format!(
                "implied vol needs t > 0 and moneyness > 0, got ({t}, {moneyness})"
            )));
        }
        Ok(self.vol(t, moneyness))
    }

    /// Total variance `σ²·t`.
    pub fn total_variance(&self, t: f64, moneyness: f64) -> f64 {
        let v = self.vol(t, moneyness);
        v * v * t
    }

    pub(crate) fn vol(&self, t: f64, k: f64) -> f64 {
        let (j, u) = bracket(&self.moneyness, k);
        let n = self.expiries.len();
        let row_var = |i: usize| {
            let a = self.vols[i][j];
            if u == 0.0 {
                return a * a;
            }
            let b = self.vols[i][j + 1];
            (1.0 - u) * a * a + u * b * b
        };
        let at_row = |i: usize| {
            if u == 0.0 {
                self.vols[i][j]
            } else {
                row_var(i).sqrt()
            }
        };
        if t <= self.expiries[0] {
            return at_row(0);
        }
        if t >= self.expiries[n - 1] {
            return at_row(n - 1);
        }
        let i = self.expiries.partition_point(|&e| e <= t) - 1;
        let (t0, t1) = (self.expiries[i], self.expiries[i + 1]);
        if t == t0 {
            return at_row(i);
        }
        let v = (t - t0) / (t1 - t0);
        let w = (1.0 - v) * row_var(i) * t0 + v * row_var(i + 1) * t1;
        (w / t).sqrt()
    }

    /// Width of the expiry cell containing `t`; the first cell runs from zero.
    pub(crate) fn expiry_cell_width(&self, t: f64) -> Option<f64> {
        let n = self.expiries.len();
        if t < self.expiries[0] {
            return Some(self.expiries[0]);
        }
        if t >= self.expiries[n - 1] {
            return None;
        }
        let i = self.expiries.partition_point(|&e| e <= t) - 1;
        Some(self.expiries[i + 1] - self.expiries[i])
    }
}

/// Left bracket index and weight, clamped to the pillar range.
fn bracket(pillars: &[f64], x: f64) -> (usize, f64) {
    let n = pillars.len();
    if x <= pillars[0] {
        return (0, 0.0);
    }
    if x >= pillars[n - 1] {
        return (n - 1, 0.0);
    }
    let j = pillars.partition_point(|&p| p <= x) - 1;
    (j, (x - pillars[j]) / (pillars[j + 1] - pillars[j]))
}

/// Free-function form of [`ImpliedVolSurface::implied_vol`].
pub fn implied_vol(surface: &ImpliedVolSurface, t: f64, moneyness: f64) -> Result<f64, MarketDataError> {
    surface.implied_vol(t, moneyness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewed() -> ImpliedVolSurface {
        ImpliedVolSurface::new(
            vec![0.5, 1.0, 2.0],
            vec![0.5, 1.0, 1.5],
            vec![
                vec![0.35, 0.22, 0.18],
                vec![0.33, 0.23, 0.19],
                vec![0.31, 0.235, 0.2],
            ],
        )
        .unwrap()
    }

    #[test]
    fn flat_surface_everywhere() {
        let s = ImpliedVolSurface::flat(0.2);
        for &(t, k) in &[(0.01, 0.1), (1.0, 1.0), (7.3, 2.4), (0.5, 0.77)] {
            assert!((s.implied_vol(t, k).unwrap() - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn nodes_are_exact() {
        let s = skewed();
        for (i, t) in s.expiries().iter().enumerate() {
            for (j, k) in s.moneyness().iter().enumerate() {
                assert_eq!(s.implied_vol(*t, *k).unwrap(), s.vols()[i][j]);
            }
        }
    }

    #[test]
    fn mid_cell_matches_bilinear_total_variance() {
        let s = skewed();
        // Independent hand computation at t = 1.5, k = 0.75.
        let w_1 = 1.0 * 0.5 * (0.33f64.powi(2) + 0.23f64.powi(2));
        let w_2 = 2.0 * 0.5 * (0.31f64.powi(2) + 0.235f64.powi(2));
        let expected = ((0.5 * w_1 + 0.5 * w_2) / 1.5).sqrt();
        assert!((s.implied_vol(1.5, 0.75).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn flat_extrapolation() {
        let s = skewed();
        assert_eq!(s.implied_vol(5.0, 3.0).unwrap(), 0.2);
        assert_eq!(s.implied_vol(0.1, 0.2).unwrap(), 0.35);
    }

    #[test]
    fn calendar_arbitrage_rejected() {
        let err = ImpliedVolSurface::new(
            vec![1.0, 2.0],
            vec![0.5, 1.5],
            vec![vec![0.3, 0.3], vec![0.2, 0.3]],
        )
        .unwrap_err();
        assert!(matches!(err, MarketDataError::CalendarArbitrage { .. }));
    }

    #[test]
    fn domain_errors() {
        let s = skewed();
        assert!(s.implied_vol(0.0, 1.0).is_err());
        assert!(s.implied_vol(1.0, -1.0).is_err());
    }
}
