use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use super::{quantile, Diagnostics, FvaComponent, FvaError, FvaMethod};
use crate::black::{black, black_digital};
use crate::engine::{prepare_model, price_paths, EngineError, McConfig, ModelKind, ModelSpec, PathValues, Simulator};
use crate::market_data::MarketSnapshot;
use crate::products::{BoundProduct, OptionKind, Product};

/// World path count above which a cost warning is attached.
pub const HEDGE_PATH_WARNING: usize = 10_000;
/// Relative spot move for finite-difference deltas on the price function.
const DELTA_BUMP: f64 = 1e-4;
/// Minimum live paths for a regression date; fewer leaves the hedge flat.
const MIN_REGRESSION_PATHS: f64 = 50.0;
/// Stream offset keeping regression paths independent of world paths.
const REGRESSION_SEED_OFFSET: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// A model with the market it is calibrated to.
#[derive(Debug, Clone)]
pub struct HedgeSide {
    pub model: ModelSpec,
    pub market: MarketSnapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgingResult {
    pub component: FvaComponent,
    /// Discounted terminal P&L per world path of a desk short the product
    /// and delta hedged in the underlying.
    pub pnl: Vec<f64>,
}

/// Value and delta of the product under the hedge model, as functions of
/// the return at a grid step.
enum PriceFunction {
    /// Terminal payoff under a flat-vol LV model: Black with curve forwards.
    Black {
        times: Vec<f64>,
        rate_int: Vec<f64>,
        carry_int: Vec<f64>,
        expiry_rate_int: f64,
        expiry_carry_int: f64,
        expiry: f64,
        vol: f64,
        payoff: TerminalPayoff,
    },
    /// Polynomial fits of discounted future cashflows on the return, one per
    /// rebalance step, plus a bumped-price delta at time zero.
    Regression {
        fits: Vec<Option<Vector5<f64>>>,
        premium: f64,
        delta0: f64,
    },
}

#[derive(Clone, Copy)]
enum TerminalPayoff {
    Vanilla { strike: f64, call: bool },
    Digital { strike: f64, leverage: f64, below: bool },
    Forward { strike: f64 },
}

fn basis(y: f64) -> Vector5<f64> {
    let u = y - 1.0;
    Vector5::new(1.0, u, u * u, u * u * u, u * u * u * u)
}

impl PriceFunction {
    fn black_value(&self, step: usize, y: f64) -> f64 {
        let Self::Black {
            times,
            rate_int,
            carry_int,
            expiry_rate_int,
            expiry_carry_int,
            expiry,
            vol,
            payoff,
        } = self
        else {
            unreachable!()
        };
        let tau = expiry - times[step];
        let r = expiry_rate_int - rate_int[step];
        let q = expiry_carry_int - carry_int[step];
        let df = (-r).exp();
        let f = y * (r - q).exp();
        df * match *payoff {
            TerminalPayoff::Vanilla { strike, call } => black(f, strike, *vol, tau, call),
            TerminalPayoff::Digital { strike, leverage, below } => leverage * black_digital(f, strike, *vol, tau, below),
            TerminalPayoff::Forward { strike } => f - strike,
        }
    }

    fn premium(&self) -> f64 {
        match self {
            Self::Black { .. } => self.black_value(0, 1.0),
            Self::Regression { premium, .. } => *premium,
        }
    }

    fn delta(&self, step: usize, y: f64) -> f64 {
        let h = DELTA_BUMP * y;
        match self {
            Self::Black { .. } => (self.black_value(step, y + h) - self.black_value(step, y - h)) / (2.0 * h),
            Self::Regression { fits, delta0, .. } => {
                if step == 0 {
                    return *delta0;
                }
                match &fits[step] {
                    Some(c) => (c.dot(&basis(y + h)) - c.dot(&basis(y - h))) / (2.0 * h),
                    None => 0.0,
                }
            }
        }
    }

    fn method(&self) -> &'static str {
        match self {
            Self::Black { .. } => "black",
            Self::Regression { .. } => "regression",
        }
    }
}

fn black_function(product: &Product, hedge: &HedgeSide, times: &[f64]) -> Option<PriceFunction> {
    if hedge.model.kind != ModelKind::Lv || !hedge.market.surface.is_flat() || product.softening().is_some() {
        return None;
    }
    let (expiry, payoff) = match product {
        Product::Vanilla(v) => (
            v.expiry,
            TerminalPayoff::Vanilla {
                strike: v.strike,
                call: v.kind == OptionKind::Call,
            },
        ),
        Product::Digital(d) => (
            d.expiry,
            TerminalPayoff::Digital {
                strike: d.strike,
                leverage: d.leverage,
                below: d.kind == OptionKind::Put,
            },
        ),
        Product::Forward(f) => (f.expiry, TerminalPayoff::Forward { strike: f.strike }),
        Product::Autocallable(_) => return None,
    };
    let curve = &hedge.market.discount;
    let carry = hedge.market.equity.carry();
    Some(PriceFunction::Black {
        times: times.to_vec(),
        rate_int: times.iter().map(|&t| curve.integrated_rate(t)).collect(),
        carry_int: times.iter().map(|&t| carry.integrated_rate(t)).collect(),
        expiry_rate_int: curve.integrated_rate(expiry),
        expiry_carry_int: carry.integrated_rate(expiry),
        expiry,
        vol: hedge.market.surface.vols()[0][0],
        payoff,
    })
}

#[derive(Clone)]
struct Normal {
    xtx: Vec<Matrix5<f64>>,
    xty: Vec<Vector5<f64>>,
    count: Vec<f64>,
    pv0: f64,
}

impl Normal {
    fn new(n: usize) -> Self {
        Self {
            xtx: vec![Matrix5::zeros(); n],
            xty: vec![Vector5::zeros(); n],
            count: vec![0.0; n],
            pv0: 0.0,
        }
    }

    fn absorb(&mut self, other: &Normal) {
        for j in 0..self.count.len() {
            self.xtx[j] += other.xtx[j];
            self.xty[j] += other.xty[j];
            self.count[j] += other.count[j];
        }
        self.pv0 += other.pv0;
    }
}

fn regression_function(
    product: &Product,
    hedge: &HedgeSide,
    config: &McConfig,
    rebalance_every: usize,
) -> Result<PriceFunction, EngineError> {
    let config = config.with_seed(config.seed.wrapping_add(REGRESSION_SEED_OFFSET));
    let horizon = product.horizon();
    let model = prepare_model(&hedge.model, &hedge.market, horizon, &config)?;
    let sim = Simulator::new(&model, &hedge.market, horizon, config)?;
    let reference = hedge.market.spot();
    let bound = product.bind(sim.times(), reference)?;
    let n = sim.n_steps() + 1;
    let chunks = sim.fold_paths(
        || (Normal::new(n), vec![0.0; n]),
        |(acc, flows), _, path| {
            flows.iter_mut().for_each(|f| *f = 0.0);
            let mut last = 0;
            bound.visit(path, |step, amount| {
                flows[step] += amount * path.discount[step];
                last = last.max(step);
            });
            let mut future = 0.0;
            for j in (1..last).rev() {
                future += flows[j + 1];
                if j % rebalance_every == 0 {
                    let x = basis(path.spot[j] / reference);
                    let target = future / path.discount[j];
                    acc.xtx[j] += x * x.transpose();
                    acc.xty[j] += x * target;
                    acc.count[j] += 1.0;
                }
            }
            acc.pv0 += flows.iter().sum::<f64>();
        },
    );
    let mut total = Normal::new(n);
    for (c, _) in &chunks {
        total.absorb(c);
    }
    let fits = (0..n)
        .map(|j| {
            if total.count[j] < MIN_REGRESSION_PATHS {
                return None;
            }
            let scale = 1.0 / total.count[j];
            let a = total.xtx[j] * scale;
            let b = total.xty[j] * scale;
            a.cholesky().map(|c| c.solve(&b)).or_else(|| a.lu().solve(&b))
        })
        .collect();

    let bumped = |sign: f64| -> Result<PathValues, EngineError> {
        let mut mk = hedge.market.clone();
        mk.equity = hedge.market.equity.with_spot(reference * (1.0 + sign * 0.01))?;
        price_paths(product, &model, &mk, &config, Some(reference))
    };
    let delta0 = bumped(1.0)?.difference(&bumped(-1.0)?).mean() / 0.02;
    Ok(PriceFunction::Regression {
        fits,
        premium: total.pv0 / config.n_paths as f64,
        delta0,
    })
}

/// Discounted terminal P&L of selling the product at the hedge-model price
/// and delta hedging it every `rebalance_every` steps, on world paths of the
/// realized model.
///
/// Hedge deltas are central differences of the hedge-model price function:
/// closed form for terminal payoffs under a flat-vol LV hedge model, else a
/// degree-4 polynomial regression of discounted future cashflows on the
/// return over independent hedge-model paths. The amount is the expected
/// loss plus `kappa` times the gap from the expected to the 95th-percentile
/// loss.
pub fn fva_hedging_simulation(
    product: &Product,
    hedge: &HedgeSide,
    realized: &HedgeSide,
    rebalance_every: usize,
    kappa: f64,
    config: &McConfig,
) -> Result<HedgingResult, FvaError> {
    if rebalance_every == 0 {
        return Err(FvaError::InvalidInput("rebalance_every must be ≥ 1 step".into()));
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(FvaError::InvalidInput(format!("kappa must be ≥ 0, got {kappa}")));
    }
    let reference = realized.market.spot();
    if (hedge.market.spot() - reference).abs() > 1e-12 * reference {
        return Err(FvaError::InvalidInput("hedge and realized markets must share the spot".into()));
    }
    let horizon = product.horizon();
    let world_model = prepare_model(&realized.model, &realized.market, horizon, config)?;
    let sim = Simulator::new(&world_model, &realized.market, horizon, *config)?;
    let times = sim.times().to_vec();
    let pricer = match black_function(product, hedge, &times) {
        Some(f) => f,
        None => regression_function(product, hedge, config, rebalance_every)?,
    };
    let bound: BoundProduct = product.bind(&times, reference)?;
    let carry = realized.market.equity.carry();
    let div_growth: Vec<f64> = times
        .windows(2)
        .map(|w| (carry.integrated_rate(w[1]) - carry.integrated_rate(w[0])).exp_m1())
        .collect();
    let premium = pricer.premium();
    let delta0 = pricer.delta(0, 1.0);
    let n = times.len();

    let pnl: Vec<f64> = sim
        .fold_paths(
            || (Vec::new(), vec![0.0; n]),
            |(out, flows), _, path| {
                flows.iter_mut().for_each(|f| *f = 0.0);
                let mut last = 0;
                bound.visit(path, |step, amount| {
                    flows[step] += amount;
                    last = last.max(step);
                });
                let mut h = delta0;
                let mut cash = premium - h * path.spot[0] / reference;
                for j in 0..last {
                    let y = path.spot[j + 1] / reference;
                    cash *= path.discount[j] / path.discount[j + 1];
                    cash += h * y * div_growth[j];
                    cash -= flows[j + 1];
                    if j + 1 == last {
                        cash += h * y;
                        h = 0.0;
                    } else if (j + 1) % rebalance_every == 0 {
                        let next = pricer.delta(j + 1, y);
                        cash -= (next - h) * y;
                        h = next;
                    }
                }
                out.push((cash + h * path.spot[last] / reference) * path.discount[last]);
            },
        )
        .into_iter()
        .flat_map(|(v, _)| v)
        .collect();

    let values = PathValues::new(pnl, config.antithetic);
    let losses: Vec<f64> = values.values().iter().map(|p| -p).collect();
    let mean_loss = -values.mean();
    let loss_p95 = quantile(&losses, 0.95);
    let amount = mean_loss.max(0.0) + kappa * (loss_p95 - mean_loss).max(0.0);
    let mut component = FvaComponent::new(
        FvaMethod::HedgingSimulation,
        format!("hedging_simulation:{}-vs-{}", hedge.model.label(), realized.model.label()),
        amount,
        Diagnostics::HedgingSimulation {
            hedge_model: hedge.model.label().into(),
            realized_model: realized.model.label().into(),
            world_paths: config.n_paths,
            rebalance_every,
            kappa,
            mean_pnl: values.mean(),
            pnl_std_error: values.std_error(),
            mean_loss,
            loss_p95,
            premium,
            delta_method: pricer.method().into(),
        },
    );
    if config.n_paths > HEDGE_PATH_WARNING {
        component.warnings.push(format!(
            "{} world paths exceeds {HEDGE_PATH_WARNING}; hedging simulation cost grows with paths × rebalance dates",
            config.n_paths
        ));
    }
    Ok(HedgingResult {
        component,
        pnl: values.values().to_vec(),
    })
}
