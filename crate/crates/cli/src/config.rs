use std::path::{Path, PathBuf};

use mrisk_core::engine::{HullWhiteParams, LeverageMode, McConfig, ModelKind, ModelSpec};
use mrisk_core::fva::{FvaMode, Parameter, ParameterSample, Position};
use mrisk_core::market_data::{load_snapshot, MarketSnapshot};
use mrisk_core::products::Bumps;
use mrisk_core::Product;
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

/// One JSON run description. Paths are relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub snapshot: String,
    pub product: String,
    pub model: ModelSection,
    pub mc: McSection,
    #[serde(default)]
    pub greeks: Option<GreeksSection>,
    #[serde(default)]
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub fva: Option<FvaSection>,
    #[serde(default)]
    pub hedge: Option<HedgeSection>,
    #[serde(default)]
    pub governance: Option<GovernanceSection>,
    #[serde(default = "default_out")]
    pub out: String,
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Inventory id used by the governance gate.
    #[serde(default)]
    pub id: Option<String>,
    pub kind: ModelKind,
    #[serde(default)]
    pub hull_white: Option<HullWhiteParams>,
    /// Defaults to the snapshot's marked equity-rate correlation.
    #[serde(default)]
    pub correlation: Option<f64>,
    #[serde(default)]
    pub leverage_mode: LeverageMode,
}

impl ModelSection {
    pub fn lv() -> Self {
        Self {
            id: None,
            kind: ModelKind::Lv,
            hull_white: None,
            correlation: None,
            leverage_mode: LeverageMode::default(),
        }
    }

    pub fn spec(&self, market: &MarketSnapshot) -> Result<ModelSpec, Failure> {
        let spec = match self.kind {
            ModelKind::Lv => ModelSpec::lv(),
            ModelKind::Hwlv => {
                let hw = self
                    .hull_white
                    .ok_or_else(|| Failure::config("HWLV model needs a hull_white section"))?;
                ModelSpec::hwlv(hw, self.correlation.unwrap_or(market.equity_rate_correlation))
                    .with_leverage_mode(self.leverage_mode)
            }
        };
        spec.validate().map_err(Failure::config)?;
        Ok(spec)
    }
}

/// The seed has no default so every run is reproducible.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    #[serde(default = "yes")]
    pub antithetic: bool,
}

fn yes() -> bool {
    true
}

impl McSection {
    pub fn config(&self) -> Result<McConfig, Failure> {
        McConfig::new(self.n_paths, self.steps_per_year, self.seed, self.antithetic).map_err(Failure::config)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreeksSection {
    #[serde(default)]
    pub bumps: Option<Bumps>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub tenors: Vec<f64>,
    pub correlations: Vec<f64>,
    /// Defaults to LV.
    #[serde(default)]
    pub baseline: Option<ModelSection>,
}

/// Market and model perturbations relative to the run's own inputs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub snapshot: Option<String>,
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub vol_shift: f64,
    #[serde(default)]
    pub rate_shift: f64,
    #[serde(default)]
    pub carry_shift: f64,
    #[serde(default)]
    pub correlation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub scenario: Scenario,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    Inline(Vec<f64>),
    File(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodConfig {
    ParameterRange {
        #[serde(default)]
        label: Option<String>,
        parameter: String,
        samples: Samples,
        #[serde(default = "p_lo")]
        p_lo: f64,
        #[serde(default = "p_hi")]
        p_hi: f64,
        #[serde(default)]
        mode: FvaMode,
    },
    SensitivityMultiple {
        #[serde(default)]
        label: Option<String>,
        parameter: String,
        multiple: f64,
        bump: f64,
        #[serde(default)]
        mode: FvaMode,
    },
    ModelComparison {
        #[serde(default)]
        label: Option<String>,
        /// Defaults to the product tenor.
        #[serde(default)]
        tenors: Option<Vec<f64>>,
        /// Defaults to the snapshot's marked correlation.
        #[serde(default)]
        correlations: Option<Vec<f64>>,
        #[serde(default)]
        baseline: Option<ModelSection>,
        #[serde(default)]
        mode: FvaMode,
    },
    CalibrationVariation {
        #[serde(default)]
        label: Option<String>,
        variants: Vec<Variant>,
        #[serde(default)]
        mode: FvaMode,
    },
    HedgingSimulation {
        #[serde(default)]
        label: Option<String>,
        simulation: HedgeSection,
        #[serde(default)]
        mode: FvaMode,
    },
}

fn p_lo() -> f64 {
    0.05
}

fn p_hi() -> f64 {
    0.95
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FvaSection {
    #[serde(default)]
    pub position: Position,
    #[serde(default)]
    pub methods: Vec<MethodConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HedgeSection {
    #[serde(default)]
    pub hedge: Scenario,
    #[serde(default)]
    pub realized: Scenario,
    /// Simulation steps between rebalances.
    #[serde(default = "one")]
    pub rebalance_every: usize,
    #[serde(default = "kappa")]
    pub kappa: f64,
    /// Overrides `mc.n_paths`.
    #[serde(default)]
    pub n_paths: Option<usize>,
}

fn one() -> usize {
    1
}

fn kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GovernanceSection {
    pub store: String,
    /// Defaults to the store path with an `audit.jsonl` extension.
    #[serde(default)]
    pub audit_log: Option<String>,
    pub product_id: String,
    /// Compare greeks against the store's risk limits.
    #[serde(default = "yes")]
    pub check_limits: bool,
}

/// A parsed config plus the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl Loaded {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { config, base })
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base.join(relative)
    }

    pub fn snapshot(&self) -> Result<MarketSnapshot, Failure> {
        load_snapshot(self.resolve(&self.config.snapshot)).map_err(Failure::config)
    }

    pub fn product(&self) -> Result<Product, Failure> {
        let path = self.resolve(&self.config.product);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Failure::config(format!("cannot read product {}: {e}", path.display())))?;
        let product: Product = serde_json::from_str(&text)
            .map_err(|e| Failure::config(format!("invalid product {}: {e}", path.display())))?;
        product.validate().map_err(Failure::config)?;
        Ok(product)
    }

    pub fn samples(&self, parameter: &str, samples: &Samples) -> Result<ParameterSample, Failure> {
        let values = match samples {
            Samples::Inline(v) => v.clone(),
            Samples::File(rel) => {
                let path = self.resolve(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Failure::config(format!("cannot read samples {}: {e}", path.display())))?;
                let file: ParameterSample = serde_json::from_str(&text)
                    .map_err(|e| Failure::config(format!("invalid samples {}: {e}", path.display())))?;
                if file.name != parameter {
                    return Err(Failure::config(format!(
                        "samples file {} holds {}, expected {parameter}",
                        path.display(),
                        file.name
                    )));
                }
                file.samples
            }
        };
        ParameterSample::new(parameter, values).map_err(Failure::config)
    }

    /// Market and model of a scenario, starting from the run's own.
    pub fn scenario(
        &self,
        scenario: &Scenario,
        market: &MarketSnapshot,
        model: &ModelSection,
    ) -> Result<(ModelSpec, MarketSnapshot), Failure> {
        let mut m = match &scenario.snapshot {
            Some(rel) => load_snapshot(self.resolve(rel)).map_err(Failure::config)?,
            None => market.clone(),
        };
        if scenario.vol_shift != 0.0 {
            m.surface = m.surface.shifted(scenario.vol_shift).map_err(Failure::config)?;
        }
        if scenario.rate_shift != 0.0 {
            m.discount = m.discount.shifted(scenario.rate_shift);
        }
        if scenario.carry_shift != 0.0 {
            m.equity = m.equity.with_carry(m.equity.carry().shifted(scenario.carry_shift));
        }
        let mut section = scenario.model.clone().unwrap_or_else(|| model.clone());
        if let Some(rho) = scenario.correlation {
            section.correlation = Some(rho);
        }
        let spec = section.spec(&m)?;
        Ok((spec, m))
    }
}

pub fn parameter(name: &str) -> Result<Parameter, Failure> {
    name.parse::<Parameter>().map_err(Failure::config)
}
