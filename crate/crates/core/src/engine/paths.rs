use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{EngineError, HullWhiteParams, McConfig, ModelKind, ModelSpec};
use crate::market_data::{DiscountCurve, GridSpec, LocalVolGrid, MarketSnapshot};

/// Simulation units handled per parallel task. Results never depend on it.
const CHUNK_UNITS: usize = 128;

/// Read-only view of one simulated path.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub times: &'a [f64],
    pub spot: &'a [f64],
    /// Discount factor from each grid time back to zero: deterministic under
    /// LV, `1 / money-market account` under HWLV.
    pub discount: &'a [f64],
    /// Hull-White OU state `x(t)`; `None` under LV.
    pub rate_state: Option<&'a [f64]>,
    pub(crate) curve: &'a DiscountCurve,
    pub(crate) hw: Option<&'a HullWhiteParams>,
}

impl PathView<'_> {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Zero-coupon bond `P(t_step, maturity)` seen on this path.
    pub fn bond(&self, step: usize, maturity: f64) -> f64 {
        let t = self.times[step];
        match (self.hw, self.rate_state) {
            (Some(hw), Some(x)) => hw.bond_from_state(self.curve, t, maturity, x[step]),
            _ => (self.curve.integrated_rate(t) - self.curve.integrated_rate(maturity)).exp(),
        }
    }

    pub fn short_rate(&self, step: usize) -> f64 {
        let t = self.times[step];
        let f = self.curve.instantaneous_forward(t);
        match (self.hw, self.rate_state) {
            (Some(hw), Some(x)) => f + hw.convexity(t) + x[step],
            _ => f,
        }
    }
}

struct RateStepper {
    params: HullWhiteParams,
    decay: f64,
    std: f64,
    rho: f64,
    rho_perp: f64,
    convexity_integral: Vec<f64>,
}

/// Path generator for one (model, market, horizon, config).
///
/// Paths are generated from per-unit ChaCha streams keyed by `(seed, unit)`,
/// where a unit is one path, or one antithetic pair. Output therefore does not
/// depend on how units are spread across threads.
pub(crate) struct Simulator<'a> {
    market: &'a MarketSnapshot,
    vol: LocalVolGrid,
    rates: Option<RateStepper>,
    config: McConfig,
    times: Vec<f64>,
    dt: f64,
    sqrt_dt: f64,
    ln_spot0: f64,
    ln_forward: Vec<f64>,
    /// `∫(f − q)` over each step.
    det_drift: Vec<f64>,
    /// `∫f` over each step.
    det_rate: Vec<f64>,
    det_discount: Vec<f64>,
}

pub(crate) struct PathBuffers {
    normals: Vec<f64>,
    spot: Vec<f64>,
    discount: Vec<f64>,
    rate_state: Vec<f64>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        model: &ModelSpec,
        market: &'a MarketSnapshot,
        horizon: f64,
        config: McConfig,
    ) -> Result<Self, EngineError> {
        let vol = match model.kind {
            ModelKind::Lv => LocalVolGrid::dupire(market, horizon, GridSpec::default()),
            ModelKind::Hwlv => {
                let lev = model.leverage.as_ref().ok_or(EngineError::MissingLeverage)?;
                if horizon > lev.horizon() + 1e-9 {
                    return Err(EngineError::Horizon(format!(
                        "leverage surface covers {}y, simulation needs {horizon}y",
                        lev.horizon()
                    )));
                }
                lev.grid.clone()
            }
        };
        Self::with_vol(model, market, horizon, config, vol)
    }

    pub fn with_vol(
        model: &ModelSpec,
        market: &'a MarketSnapshot,
        horizon: f64,
        config: McConfig,
        vol: LocalVolGrid,
    ) -> Result<Self, EngineError> {
        model.validate()?;
        config.validate()?;
        if !(horizon > 0.0) {
            return Err(EngineError::Horizon(format!("horizon must be > 0, got {horizon}")));
        }
        let spy = config.steps_per_year as f64;
        let n_steps = ((horizon * spy - 1e-9).ceil() as usize).max(1);
        let times: Vec<f64> = (0..=n_steps).map(|j| j as f64 / spy).collect();
        let dt = 1.0 / spy;

        let curve = &market.discount;
        let carry = market.equity.carry();
        let rate_int: Vec<f64> = times.iter().map(|&t| curve.integrated_rate(t)).collect();
        let carry_int: Vec<f64> = times.iter().map(|&t| carry.integrated_rate(t)).collect();
        let ln_spot0 = market.spot().ln();
        let ln_forward = rate_int
            .iter()
            .zip(&carry_int)
            .map(|(r, q)| ln_spot0 + r - q)
            .collect();
        let det_rate: Vec<f64> = rate_int.windows(2).map(|w| w[1] - w[0]).collect();
        let det_drift = det_rate
            .iter()
            .zip(carry_int.windows(2))
            .map(|(r, q)| r - (q[1] - q[0]))
            .collect();
        let det_discount = rate_int.iter().map(|r| (-r).exp()).collect();

        let rates = match model.kind {
            ModelKind::Lv => None,
            ModelKind::Hwlv => {
                let params = model.hw.expect("validated");
                let rho = model.equity_rate_correlation;
                Some(RateStepper {
                    params,
                    decay: (-params.mean_reversion * dt).exp(),
                    std: params.step_std(dt),
                    rho,
                    rho_perp: (1.0 - rho * rho).max(0.0).sqrt(),
                    convexity_integral: times
                        .windows(2)
                        .map(|w| params.convexity_integral(w[0], w[1]))
                        .collect(),
                })
            }
        };

        Ok(Self {
            market,
            vol,
            rates,
            config,
            times,
            dt,
            sqrt_dt: dt.sqrt(),
            ln_spot0,
            ln_forward,
            det_drift,
            det_rate,
            det_discount,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn ln_forward(&self, step: usize) -> f64 {
        self.ln_forward[step]
    }

    fn n_units(&self) -> usize {
        if self.config.antithetic {
            self.config.n_paths.div_ceil(2)
        } else {
            self.config.n_paths
        }
    }

    fn buffers(&self) -> PathBuffers {
        let n = self.n_steps();
        PathBuffers {
            normals: vec![0.0; 2 * n],
            spot: vec![0.0; n + 1],
            discount: vec![0.0; n + 1],
            rate_state: vec![0.0; n + 1],
        }
    }

    fn fill_normals(&self, unit: usize, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(unit as u64);
        for z in out.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
    }

    fn run(&self, sign: f64, buf: &mut PathBuffers) {
        let n = self.n_steps();
        let dt = self.dt;
        let mut ln_s = self.ln_spot0;
        let mut x = 0.0;
        let mut ln_m = 0.0;
        buf.spot[0] = self.market.spot();
        buf.discount[0] = 1.0;
        buf.rate_state[0] = 0.0;
        for j in 0..n {
            let vol = self.vol.eval(self.times[j], ln_s - self.ln_forward[j]);
            let z1 = sign * buf.normals[2 * j];
            let mut extra = 0.0;
            if let Some(r) = &self.rates {
                let z2 = sign * buf.normals[2 * j + 1];
                let x_next = x * r.decay + r.std * (r.rho * z1 + r.rho_perp * z2);
                extra = r.convexity_integral[j] + 0.5 * (x + x_next) * dt;
                x = x_next;
                ln_m += self.det_rate[j] + extra;
                buf.discount[j + 1] = (-ln_m).exp();
                buf.rate_state[j + 1] = x;
            } else {
                buf.discount[j + 1] = self.det_discount[j + 1];
            }
            ln_s += (self.det_drift[j] + extra) - 0.5 * vol * vol * dt + vol * self.sqrt_dt * z1;
            buf.spot[j + 1] = ln_s.exp();
        }
    }

    fn view<'b>(&'b self, buf: &'b PathBuffers) -> PathView<'b> {
        PathView {
            times: &self.times,
            spot: &buf.spot,
            discount: &buf.discount,
            rate_state: self.rates.as_ref().map(|_| buf.rate_state.as_slice()),
            curve: &self.market.discount,
            hw: self.rates.as_ref().map(|r| &r.params),
        }
    }

    /// Folds every path into per-chunk accumulators, returned in chunk order.
    pub fn fold_paths<A, I, F>(&self, init: I, fold: F) -> Vec<A>
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, usize, &PathView) + Sync,
    {
        let n_units = self.n_units();
        let n_chunks = n_units.div_ceil(CHUNK_UNITS);
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let mut buf = self.buffers();
                for unit in c * CHUNK_UNITS..((c + 1) * CHUNK_UNITS).min(n_units) {
                    self.fill_normals(unit, &mut buf.normals);
                    if self.config.antithetic {
                        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
                            let path = 2 * unit + k;
                            if path < self.config.n_paths {
                                self.run(sign, &mut buf);
                                fold(&mut acc, path, &self.view(&buf));
                            }
                        }
                    } else {
                        self.run(1.0, &mut buf);
                        fold(&mut acc, unit, &self.view(&buf));
                    }
                }
                acc
            })
            .collect()
    }

    /// One value per path, in path order.
    pub fn map_paths<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&PathView) -> T + Sync,
    {
        self.fold_paths(Vec::new, |acc, _, view| acc.push(f(view)))
            .into_iter()
            .flatten()
            .collect()
    }
}

/// Fully materialised simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    /// Row per path.
    pub spot: Vec<Vec<f64>>,
    /// Short rate per path; `None` under LV.
    pub short_rate: Option<Vec<Vec<f64>>>,
    /// Money-market account per path (deterministic curve growth under LV).
    pub money_market: Vec<Vec<f64>>,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.spot.len()
    }
}

/// Simulates and stores every path. Pricing streams paths instead; this is
/// for inspection and tests.
pub fn simulate_paths(
    model: &ModelSpec,
    market: &MarketSnapshot,
    horizon: f64,
    config: &McConfig,
) -> Result<PathSet, EngineError> {
    let sim = Simulator::new(model, market, horizon, *config)?;
    let hybrid = model.is_hybrid();
    let rows = sim.map_paths(|p| {
        let rates = hybrid.then(|| (0..p.times.len()).map(|j| p.short_rate(j)).collect::<Vec<_>>());
        (
            p.spot.to_vec(),
            rates,
            p.discount.iter().map(|d| 1.0 / d).collect::<Vec<_>>(),
        )
    });
    let mut spot = Vec::with_capacity(rows.len());
    let mut short_rate = Vec::with_capacity(rows.len());
    let mut money_market = Vec::with_capacity(rows.len());
    for (s, r, m) in rows {
        spot.push(s);
        if let Some(r) = r {
            short_rate.push(r);
        }
        money_market.push(m);
    }
    Ok(PathSet {
        times: sim.times().to_vec(),
        spot,
        short_rate: hybrid.then_some(short_rate),
        money_market,
    })
}
