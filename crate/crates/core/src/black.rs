//! Black formulas on forwards. Used for vanilla densities in leverage
//! calibration and for analytic hedge deltas.

use statrs::distribution::{ContinuousCDF, Normal};

fn norm_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Undiscounted Black price of a call or put.
pub fn black(forward: f64, strike: f64, vol: f64, t: f64, is_call: bool) -> f64 {
    let intrinsic = if is_call {
        (forward - strike).max(0.0)
    } else {
        (strike - forward).max(0.0)
    };
    let sd = vol * t.max(0.0).sqrt();
    if sd <= 0.0 {
        return intrinsic;
    }
    let d1 = ((forward / strike).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    if is_call {
        forward * norm_cdf(d1) - strike * norm_cdf(d2)
    } else {
        strike * norm_cdf(-d2) - forward * norm_cdf(-d1)
    }
}

/// Undiscounted probability that the terminal value ends below (`below = true`)
/// or at/above the strike under the lognormal forward measure.
pub fn black_digital(forward: f64, strike: f64, vol: f64, t: f64, below: bool) -> f64 {
    let sd = vol * t.max(0.0).sqrt();
    if sd <= 0.0 {
        let hit = if below { forward < strike } else { forward >= strike };
        return if hit { 1.0 } else { 0.0 };
    }
    let d2 = ((forward / strike).ln() - 0.5 * sd * sd) / sd;
    if below {
        norm_cdf(-d2)
    } else {
        norm_cdf(d2)
    }
}
