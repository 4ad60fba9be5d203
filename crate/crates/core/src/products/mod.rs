//! Payoffs, pathwise cashflows, payoff softening and bump-and-revalue greeks.
//!
//! Every payoff is written on the underlying's return `S / S_ref` and valued
//! per unit notional.

mod autocallable;
mod greeks;
mod options;
mod softening;

pub use autocallable::{autocall_cashflows, Autocallable, FloatingLeg};
pub use greeks::{greeks, Bumps, Greek, GreeksReport};
pub use options::{DigitalOption, ForwardContract, OptionKind, VanillaOption};
pub use softening::{soften, Knot, PayoffProfile, PiecewiseLinear, SampledProfile, SofteningPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::PathView;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductError {
    #[error("invalid product: {0}")]
    Invalid(String),
    #[error("configuration error: {0}")]
    GridMisalignment(String),
}

const GRID_TOLERANCE: f64 = 1e-9;

/// Index of `t` on `times`, which must hold it.
pub(crate) fn grid_index(times: &[f64], t: f64) -> Result<usize, ProductError> {
    let i = times.partition_point(|&x| x < t - GRID_TOLERANCE);
    match times.get(i) {
        Some(&x) if (x - t).abs() <= GRID_TOLERANCE => Ok(i),
        _ => Err(ProductError::GridMisalignment(format!(
            "date {t} is not on the simulation grid (step {}, last {})",
            times.get(1).copied().unwrap_or(0.0),
            times.last().copied().unwrap_or(0.0)
        ))),
    }
}

/// Any payoff the engine can price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Product {
    Autocallable(Autocallable),
    Vanilla(VanillaOption),
    Digital(DigitalOption),
    Forward(ForwardContract),
}

impl Product {
    /// Last date a cashflow can occur.
    pub fn horizon(&self) -> f64 {
        match self {
            Self::Autocallable(a) => a.maturity(),
            Self::Vanilla(v) => v.expiry,
            Self::Digital(d) => d.expiry,
            Self::Forward(f) => f.expiry,
        }
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        match self {
            Self::Autocallable(a) => a.validate(),
            Self::Vanilla(v) => v.validate(),
            Self::Digital(d) => d.validate(),
            Self::Forward(f) => f.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Autocallable(_) => "autocallable",
            Self::Vanilla(_) => "vanilla",
            Self::Digital(_) => "digital",
            Self::Forward(_) => "forward",
        }
    }

    pub fn softening(&self) -> Option<&SofteningPolicy> {
        match self {
            Self::Autocallable(a) => a.softening.as_ref(),
            Self::Vanilla(v) => v.softening.as_ref(),
            Self::Digital(d) => d.softening.as_ref(),
            Self::Forward(_) => None,
        }
    }

    pub fn with_softening(&self, policy: Option<SofteningPolicy>) -> Self {
        let mut p = self.clone();
        match &mut p {
            Self::Autocallable(a) => a.softening = policy,
            Self::Vanilla(v) => v.softening = policy,
            Self::Digital(d) => d.softening = policy,
            Self::Forward(_) => {}
        }
        p
    }

    /// Same terms over a different tenor. Observation schedules keep their
    /// spacing and gain or lose dates.
    pub fn with_tenor(&self, tenor: f64) -> Result<Self, ProductError> {
        if !(tenor > 0.0) {
            return Err(ProductError::Invalid(format!("tenor must be > 0, got {tenor}")));
        }
        let mut p = self.clone();
        match &mut p {
            Self::Autocallable(a) => {
                let period = a.observation_dates[0] - a.start_time;
                let n = ((tenor / period).round() as usize).max(1);
                a.observation_dates = (1..=n).map(|i| a.start_time + i as f64 * period).collect();
            }
            Self::Vanilla(v) => v.expiry = tenor,
            Self::Digital(d) => d.expiry = tenor,
            Self::Forward(f) => f.expiry = tenor,
        }
        p.validate()?;
        Ok(p)
    }

    /// Whether the payoff starts after the valuation date.
    pub fn is_forward_start(&self) -> bool {
        matches!(self, Self::Autocallable(a) if a.start_time > 0.0)
    }

    /// Resolves dates against a simulation grid. Returns are measured
    /// against `reference_spot` unless the product fixes its own reference.
    pub fn bind(&self, times: &[f64], reference_spot: f64) -> Result<BoundProduct, ProductError> {
        self.validate()?;
        let terminal = |expiry: f64, profile: PiecewiseLinear, softening: Option<&SofteningPolicy>| {
            let profile = PayoffProfile::from(profile);
            Ok(BoundProduct::Terminal {
                step: grid_index(times, expiry)?,
                reference: reference_spot,
                profile: match softening {
                    Some(p) => soften(&profile, p),
                    None => profile,
                },
            })
        };
        match self {
            Self::Autocallable(a) => a.bind(times, reference_spot),
            Self::Vanilla(v) => terminal(v.expiry, v.profile(), v.softening.as_ref()),
            Self::Digital(d) => terminal(d.expiry, d.profile(), d.softening.as_ref()),
            Self::Forward(f) => terminal(f.expiry, f.profile(), None),
        }
    }
}

/// One payment per unit notional, from the holder's side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cashflow {
    pub step: usize,
    pub time: f64,
    pub amount: f64,
}

/// A product resolved against a time grid, ready for pathwise evaluation.
#[derive(Debug, Clone)]
pub enum BoundProduct {
    Terminal {
        step: usize,
        reference: f64,
        profile: PayoffProfile,
    },
    Autocall(autocallable::BoundAutocall),
}

impl BoundProduct {
    /// Calls `pay(step, amount)` for every cashflow on the path, in time order.
    pub fn visit<F: FnMut(usize, f64)>(&self, path: &PathView, pay: F) {
        match self {
            Self::Terminal { step, reference, profile } => {
                let mut pay = pay;
                pay(*step, profile.value(path.spot[*step] / reference));
            }
            Self::Autocall(a) => a.visit(path, pay),
        }
    }

    pub fn cashflows(&self, path: &PathView) -> Vec<Cashflow> {
        let mut out = Vec::new();
        self.visit(path, |step, amount| {
            out.push(Cashflow {
                step,
                time: path.times[step],
                amount,
            })
        });
        out
    }

    /// Sum of cashflows discounted to time zero along the path.
    pub fn present_value(&self, path: &PathView) -> f64 {
        let mut pv = 0.0;
        self.visit(path, |step, amount| pv += amount * path.discount[step]);
        pv
    }

    /// Last step carrying a cashflow on any path.
    pub fn last_step(&self) -> usize {
        match self {
            Self::Terminal { step, .. } => *step,
            Self::Autocall(a) => a.last_step(),
        }
    }
}
