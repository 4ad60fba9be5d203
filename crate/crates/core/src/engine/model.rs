use serde::{Deserialize, Serialize};

use super::{EngineError, HullWhiteParams};
use crate::market_data::LocalVolGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Lv,
    Hwlv,
}

/// How the hybrid's equity leverage is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverageMode {
    /// Fixed-point recalibration so the hybrid reprices vanillas.
    #[default]
    Recalibrate,
    /// Use the deterministic-rates Dupire surface unchanged.
    ReuseLocalVol,
}

/// Leverage function of the hybrid model on a (time, log-moneyness) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeverageSurface {
    pub grid: LocalVolGrid,
    pub mode: LeverageMode,
    pub sweeps: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl LeverageSurface {
    pub const MIN: f64 = 0.01;
    pub const MAX: f64 = 10.0;

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }
}

/// Model selection and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hw: Option<HullWhiteParams>,
    pub equity_rate_correlation: f64,
    pub leverage_mode: LeverageMode,
    pub leverage: Option<LeverageSurface>,
}

impl ModelSpec {
    pub fn lv() -> Self {
        Self {
            kind: ModelKind::Lv,
            hw: None,
            equity_rate_correlation: 0.0,
            leverage_mode: LeverageMode::Recalibrate,
            leverage: None,
        }
    }

    /// Hybrid spec without leverage; see [`super::prepare_model`].
    pub fn hwlv(hw: HullWhiteParams, correlation: f64) -> Self {
        Self {
            kind: ModelKind::Hwlv,
            hw: Some(hw),
            equity_rate_correlation: correlation,
            leverage_mode: LeverageMode::Recalibrate,
            leverage: None,
        }
    }

    pub fn with_leverage_mode(mut self, mode: LeverageMode) -> Self {
        self.leverage_mode = mode;
        self
    }

    pub fn with_leverage(mut self, leverage: LeverageSurface) -> Self {
        self.leverage = Some(leverage);
        self
    }

    pub fn is_hybrid(&self) -> bool {
        self.kind == ModelKind::Hwlv
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ModelKind::Lv => "LV",
            ModelKind::Hwlv => "HWLV",
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(-1.0..=1.0).contains(&self.equity_rate_correlation) {
            return Err(EngineError::Config(format!(
                "equity-rate correlation {} outside [-1, 1]",
                self.equity_rate_correlation
            )));
        }
        match self.kind {
            ModelKind::Lv => {
                if self.leverage.is_some() {
                    return Err(EngineError::Config("leverage surface given for LV model".into()));
                }
            }
            ModelKind::Hwlv => {
                self.hw
                    .ok_or_else(|| EngineError::Config("HWLV model needs Hull-White parameters".into()))?
                    .validate()?;
            }
        }
        Ok(())
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: usize, steps_per_year: usize, seed: u64, antithetic: bool) -> Result<Self, EngineError> {
        let c = Self {
            n_paths,
            steps_per_year,
            seed,
            antithetic,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.n_paths < 2 {
            return Err(EngineError::Config(format!("n_paths must be >= 2, got {}", self.n_paths)));
        }
        if self.steps_per_year < 12 {
            return Err(EngineError::Config(format!(
                "steps_per_year must be >= 12, got {}",
                self.steps_per_year
            )));
        }
        Ok(())
    }

    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
