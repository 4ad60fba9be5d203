//! Fair value adjustments for model risk: parameter ranges, sensitivity
//! multiples, model comparison, calibration variation and hedging simulation,
//! consolidated into a report.

mod hedging;
mod params;
mod report;

pub use hedging::{fva_hedging_simulation, HedgeSide, HedgingResult, HEDGE_PATH_WARNING};
pub use params::{quantile, Parameter, ParameterSample};
pub use report::{build_report, FvaReport, ReportEntry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{prepare_model, price_paths, reprepare_model, EngineError, McConfig, ModelSpec, PathValues};
use crate::market_data::MarketSnapshot;
use crate::products::Product;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FvaError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("unknown parameter: {0}")]
    UnknownParameter(String),
    #[error("need at least 2 samples or variants, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
}

impl From<crate::products::ProductError> for FvaError {
    fn from(e: crate::products::ProductError) -> Self {
        Self::Engine(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FvaMethod {
    ParameterRange,
    SensitivityMultiple,
    ModelComparison,
    CalibrationVariation,
    HedgingSimulation,
}

impl FvaMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ParameterRange => "parameter_range",
            Self::SensitivityMultiple => "sensitivity_multiple",
            Self::ModelComparison => "model_comparison",
            Self::CalibrationVariation => "calibration_variation",
            Self::HedgingSimulation => "hedging_simulation",
        }
    }

    /// Whether the adjustment can be booked as a conservative input instead
    /// of a separate reserve.
    pub fn embeddable(&self) -> bool {
        matches!(self, Self::ParameterRange | Self::SensitivityMultiple | Self::CalibrationVariation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FvaMode {
    #[default]
    External,
    Embedded,
}

/// Side of the booked product. Adverse moves lower the value for a long desk
/// and raise it for a short one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    #[default]
    Long,
    Short,
}

impl Position {
    /// Loss from a value change `moved − base`.
    pub fn loss(&self, change: f64) -> f64 {
        match self {
            Self::Long => -change,
            Self::Short => change,
        }
    }
}

/// Input to book instead of the market one when the adjustment is embedded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BookedInput {
    Parameter { name: String, value: f64 },
    Variant { label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostics {
    ParameterRange {
        parameter: String,
        p_lo: f64,
        p_hi: f64,
        median: f64,
        q_lo: f64,
        q_hi: f64,
        price_median: f64,
        price_lo: f64,
        price_hi: f64,
        /// Std errors of the common-random-number differences to the median price.
        std_error_lo: f64,
        std_error_hi: f64,
    },
    SensitivityMultiple {
        parameter: String,
        base_value: f64,
        bump: f64,
        multiple: f64,
        sensitivity: f64,
        std_error: f64,
    },
    ModelComparison {
        baseline: String,
        alternative: String,
        tenor: f64,
        correlation: f64,
        difference: f64,
        std_error: f64,
        grid: ComparisonGrid,
    },
    CalibrationVariation {
        labels: Vec<String>,
        prices: Vec<f64>,
        std_errors: Vec<f64>,
    },
    HedgingSimulation {
        hedge_model: String,
        realized_model: String,
        world_paths: usize,
        rebalance_every: usize,
        kappa: f64,
        mean_pnl: f64,
        pnl_std_error: f64,
        mean_loss: f64,
        loss_p95: f64,
        premium: f64,
        delta_method: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FvaComponent {
    pub method: FvaMethod,
    pub label: String,
    /// Per unit notional, never negative.
    pub amount: f64,
    pub mode: FvaMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub booked_input: Option<BookedInput>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub diagnostics: Diagnostics,
}

impl FvaComponent {
    fn new(method: FvaMethod, label: String, amount: f64, diagnostics: Diagnostics) -> Self {
        Self {
            method,
            label,
            amount: amount.max(0.0),
            mode: FvaMode::External,
            booked_input: None,
            warnings: Vec::new(),
            diagnostics,
        }
    }
}

/// Reprices one product on common random numbers with returns fixed to the
/// base spot.
struct Repricer<'a> {
    product: &'a Product,
    config: &'a McConfig,
    horizon: f64,
    reference: f64,
}

impl<'a> Repricer<'a> {
    fn new(product: &'a Product, market: &MarketSnapshot, config: &'a McConfig) -> Self {
        Self {
            product,
            config,
            horizon: product.horizon(),
            reference: market.spot(),
        }
    }

    fn prepare(&self, model: &ModelSpec, market: &MarketSnapshot) -> Result<ModelSpec, EngineError> {
        prepare_model(model, market, self.horizon, self.config)
    }

    /// `refit` drops any leverage and fits it again to `market`.
    fn values(&self, model: &ModelSpec, market: &MarketSnapshot, refit: bool) -> Result<PathValues, EngineError> {
        let m = if refit && model.is_hybrid() {
            reprepare_model(model, market, self.horizon, self.config)?
        } else {
            self.prepare(model, market)?
        };
        price_paths(self.product, &m, market, self.config, Some(self.reference))
    }

    fn at(&self, base: &ModelSpec, market: &MarketSnapshot, p: Parameter, value: f64) -> Result<PathValues, FvaError> {
        let (m, mk) = p.apply(base, market, self.horizon, value)?;
        Ok(self.values(&m, &mk, p.moves_leverage())?)
    }
}

/// Adjustment from repricing at the `p_lo` and `p_hi` quantiles of a
/// historical sample, against the price at the sample median.
#[allow(clippy::too_many_arguments)]
pub fn fva_parameter_range(
    product: &Product,
    model: &ModelSpec,
    market: &MarketSnapshot,
    sample: &ParameterSample,
    p_lo: f64,
    p_hi: f64,
    config: &McConfig,
    position: Position,
) -> Result<FvaComponent, FvaError> {
    let p = sample.validate()?;
    if !(0.0 <= p_lo && p_lo < p_hi && p_hi <= 1.0) {
        return Err(FvaError::InvalidInput(format!("need 0 ≤ p_lo < p_hi ≤ 1, got {p_lo}, {p_hi}")));
    }
    let r = Repricer::new(product, market, config);
    let base = r.prepare(model, market)?;
    let (median, q_lo, q_hi) = (sample.quantile(0.5), sample.quantile(p_lo), sample.quantile(p_hi));
    let v_mid = r.at(&base, market, p, median)?;
    let v_lo = r.at(&base, market, p, q_lo)?;
    let v_hi = r.at(&base, market, p, q_hi)?;
    let d_lo = v_lo.difference(&v_mid);
    let d_hi = v_hi.difference(&v_mid);
    let (loss_lo, loss_hi) = (position.loss(d_lo.mean()), position.loss(d_hi.mean()));
    let (amount, adverse) = if loss_hi > loss_lo { (loss_hi, q_hi) } else { (loss_lo, q_lo) };
    let mut c = FvaComponent::new(
        FvaMethod::ParameterRange,
        format!("parameter_range:{p}"),
        amount,
        Diagnostics::ParameterRange {
            parameter: p.name().into(),
            p_lo,
            p_hi,
            median,
            q_lo,
            q_hi,
            price_median: v_mid.mean(),
            price_lo: v_lo.mean(),
            price_hi: v_hi.mean(),
            std_error_lo: d_lo.std_error(),
            std_error_hi: d_hi.std_error(),
        },
    );
    c.booked_input = Some(BookedInput::Parameter {
        name: p.name().into(),
        value: if amount > 0.0 { adverse } else { median },
    });
    Ok(c)
}

/// `multiple × |sensitivity| × bump`, with the sensitivity a central
/// difference over `±bump`.
pub fn fva_sensitivity_multiple(
    product: &Product,
    model: &ModelSpec,
    market: &MarketSnapshot,
    parameter: Parameter,
    multiple: f64,
    bump: f64,
    config: &McConfig,
) -> Result<FvaComponent, FvaError> {
    if !(multiple >= 0.0 && multiple.is_finite()) {
        return Err(FvaError::InvalidInput(format!("multiple must be ≥ 0, got {multiple}")));
    }
    if !(bump > 0.0 && bump.is_finite()) {
        return Err(FvaError::InvalidInput(format!("bump must be > 0, got {bump}")));
    }
    let r = Repricer::new(product, market, config);
    let base = r.prepare(model, market)?;
    let x0 = parameter.base_value(&base, market, r.horizon)?;
    let up = r.at(&base, market, parameter, x0 + bump)?;
    let dn = r.at(&base, market, parameter, x0 - bump)?;
    let diff = up.difference(&dn);
    let sensitivity = diff.mean() / (2.0 * bump);
    let amount = multiple * sensitivity.abs() * bump;
    let mut c = FvaComponent::new(
        FvaMethod::SensitivityMultiple,
        format!("sensitivity_multiple:{parameter}"),
        amount,
        Diagnostics::SensitivityMultiple {
            parameter: parameter.name().into(),
            base_value: x0,
            bump,
            multiple,
            sensitivity,
            std_error: diff.std_error() / (2.0 * bump),
        },
    );
    // A long desk books the input moved against the value.
    let direction = if sensitivity > 0.0 { -1.0 } else { 1.0 };
    c.booked_input = Some(BookedInput::Parameter {
        name: parameter.name().into(),
        value: x0 + direction * multiple * bump,
    });
    Ok(c)
}

/// Signed `P_alternative − P_baseline` per unit notional on a tenor ×
/// correlation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGrid {
    pub tenors: Vec<f64>,
    pub correlations: Vec<f64>,
    /// Row per tenor.
    pub difference: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub baseline: Vec<Vec<f64>>,
    pub alternative: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ComparisonGrid {
    /// CSV in basis points of notional: a header of correlations, then a
    /// row per tenor.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tenor_years");
        for c in &self.correlations {
            out.push_str(&format!(",rho={c}"));
        }
        out.push('\n');
        for (t, row) in self.tenors.iter().zip(&self.difference) {
            out.push_str(&t.to_string());
            for v in row {
                out.push_str(&format!(",{:.4}", v * 1e4));
            }
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, tenor: f64, correlation: f64) -> Option<(f64, f64)> {
        let i = self.tenors.iter().position(|&t| (t - tenor).abs() < 1e-12)?;
        let j = self.correlations.iter().position(|&c| (c - correlation).abs() < 1e-12)?;
        Some((self.difference[i][j], self.std_error[i][j]))
    }
}

fn with_correlation(model: &ModelSpec, rho: f64) -> ModelSpec {
    let mut m = model.clone();
    if m.is_hybrid() {
        m.equity_rate_correlation = rho;
        m.leverage = None;
    }
    m
}

/// Grid of model differences. Hybrid models get the grid correlation and a
/// leverage fitted over the longest tenor.
pub fn comparison_grid(
    product: &Product,
    market: &MarketSnapshot,
    baseline: &ModelSpec,
    alternative: &ModelSpec,
    tenors: &[f64],
    correlations: &[f64],
    config: &McConfig,
) -> Result<ComparisonGrid, FvaError> {
    if tenors.is_empty() || correlations.is_empty() {
        return Err(FvaError::InvalidInput("grid needs at least one tenor and one correlation".into()));
    }
    if let Some(rho) = correlations.iter().find(|r| !(-1.0..=1.0).contains(*r)) {
        return Err(FvaError::InvalidInput(format!("correlation {rho} outside [-1, 1]")));
    }
    let products = tenors
        .iter()
        .map(|&t| product.with_tenor(t))
        .collect::<Result<Vec<_>, _>>()?;
    let horizon = products.iter().map(Product::horizon).fold(0.0, f64::max);
    let reference = market.spot();
    let n_t = tenors.len();
    let mut grid = ComparisonGrid {
        tenors: tenors.to_vec(),
        correlations: correlations.to_vec(),
        difference: vec![Vec::new(); n_t],
        std_error: vec![Vec::new(); n_t],
        baseline: vec![Vec::new(); n_t],
        alternative: vec![Vec::new(); n_t],
        warnings: Vec::new(),
    };
    let fixed_baseline: Option<Vec<PathValues>> = if baseline.is_hybrid() {
        None
    } else {
        Some(
            products
                .iter()
                .map(|p| price_paths(p, baseline, market, config, Some(reference)))
                .collect::<Result<_, _>>()?,
        )
    };
    for &rho in correlations {
        let prep = |m: &ModelSpec| -> Result<ModelSpec, EngineError> {
            let m = prepare_model(&with_correlation(m, rho), market, horizon, config)?;
            Ok(m)
        };
        let alt = prep(alternative)?;
        let base = match fixed_baseline {
            Some(_) => None,
            None => Some(prep(baseline)?),
        };
        for m in std::iter::once(&alt).chain(base.as_ref()) {
            if let Some(lev) = &m.leverage {
                grid.warnings.extend(lev.warnings.iter().map(|w| format!("rho={rho}: {w}")));
            }
        }
        for (i, p) in products.iter().enumerate() {
            let b = match (&fixed_baseline, &base) {
                (Some(v), _) => v[i].clone(),
                (None, Some(m)) => price_paths(p, m, market, config, Some(reference))?,
                (None, None) => unreachable!(),
            };
            let a = price_paths(p, &alt, market, config, Some(reference))?;
            let d = a.difference(&b);
            grid.difference[i].push(d.mean());
            grid.std_error[i].push(d.std_error());
            grid.baseline[i].push(b.mean());
            grid.alternative[i].push(a.mean());
        }
    }
    Ok(grid)
}

/// Model comparison grid plus the adjustment at the marked correlation and
/// the product's own tenor.
#[allow(clippy::too_many_arguments)]
pub fn fva_model_comparison(
    product: &Product,
    market: &MarketSnapshot,
    baseline: &ModelSpec,
    alternative: &ModelSpec,
    tenors: &[f64],
    correlations: &[f64],
    config: &McConfig,
    position: Position,
) -> Result<(ComparisonGrid, FvaComponent), FvaError> {
    let grid = comparison_grid(product, market, baseline, alternative, tenors, correlations, config)?;
    let tenor = product.horizon();
    let rho = market.equity_rate_correlation;
    let (difference, std_error) = match grid.cell(tenor, rho) {
        Some(cell) => cell,
        None => {
            let g = comparison_grid(product, market, baseline, alternative, &[tenor], &[rho], config)?;
            (g.difference[0][0], g.std_error[0][0])
        }
    };
    let mut c = FvaComponent::new(
        FvaMethod::ModelComparison,
        format!("model_comparison:{}-{}", alternative.label(), baseline.label()),
        position.loss(difference),
        Diagnostics::ModelComparison {
            baseline: baseline.label().into(),
            alternative: alternative.label().into(),
            tenor,
            correlation: rho,
            difference,
            std_error,
            grid: grid.clone(),
        },
    );
    c.warnings = grid.warnings.clone();
    Ok((grid, c))
}

/// One calibration of the pricing inputs.
#[derive(Debug, Clone)]
pub struct CalibrationVariant {
    pub label: String,
    pub model: ModelSpec,
    pub market: MarketSnapshot,
}

/// Spread between the highest and lowest price across calibration variants.
pub fn fva_calibration_variation(
    product: &Product,
    variants: &[CalibrationVariant],
    config: &McConfig,
    position: Position,
) -> Result<FvaComponent, FvaError> {
    if variants.len() < 2 {
        return Err(FvaError::InsufficientSamples(variants.len()));
    }
    let r = Repricer::new(product, &variants[0].market, config);
    let mut prices = Vec::with_capacity(variants.len());
    let mut std_errors = Vec::with_capacity(variants.len());
    for v in variants {
        let pv = r.values(&v.model, &v.market, false)?;
        prices.push(pv.mean());
        std_errors.push(pv.std_error());
    }
    let (mut lo, mut hi) = (0, 0);
    for (i, &p) in prices.iter().enumerate() {
        if p < prices[lo] {
            lo = i;
        }
        if p > prices[hi] {
            hi = i;
        }
    }
    let adverse = match position {
        Position::Long => lo,
        Position::Short => hi,
    };
    let mut c = FvaComponent::new(
        FvaMethod::CalibrationVariation,
        "calibration_variation".into(),
        prices[hi] - prices[lo],
        Diagnostics::CalibrationVariation {
            labels: variants.iter().map(|v| v.label.clone()).collect(),
            prices,
            std_errors,
        },
    );
    c.booked_input = Some(BookedInput::Variant {
        label: variants[adverse].label.clone(),
    });
    Ok(c)
}
