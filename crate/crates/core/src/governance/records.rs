use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::GovernanceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStatus {
    Candidate,
    Approved,
    Restricted,
    Decommissioned,
}

impl ModelStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Candidate => "candidate",
            Self::Approved => "approved",
            Self::Restricted => "restricted",
            Self::Decommissioned => "decommissioned",
        }
    }

    /// Lifecycle runs candidate → approved → restricted → decommissioned;
    /// restricted models may return to approved and approved models may be
    /// retired directly.
    pub fn can_become(&self, next: ModelStatus) -> bool {
        use ModelStatus::*;
        matches!(
            (self, next),
            (Candidate, Approved)
                | (Approved, Restricted)
                | (Approved, Decommissioned)
                | (Restricted, Approved)
                | (Restricted, Decommissioned)
        )
    }
}

impl fmt::Display for ModelStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelStatus {
    type Err = GovernanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Self::Candidate, Self::Approved, Self::Restricted, Self::Decommissioned]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| GovernanceError::Invalid(format!("unknown status {s}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub id: String,
    pub name: String,
    /// 1 carries the most model risk, 3 the least.
    pub risk_tier: u8,
    pub status: ModelStatus,
    pub last_validation: NaiveDate,
    pub review_period_months: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductRecord {
    pub id: String,
    pub family: String,
    pub max_maturity: f64,
    pub forward_start_allowed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingStatus {
    Allowed,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingRecord {
    pub product_family: String,
    pub model_id: String,
    pub status: MappingStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitMetric {
    CorrelationSensitivity,
    Vanna,
    Gamma,
}

impl fmt::Display for LimitMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CorrelationSensitivity => "correlation_sensitivity",
            Self::Vanna => "vanna",
            Self::Gamma => "gamma",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitAction {
    Warn,
    Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskLimit {
    pub metric: LimitMetric,
    pub threshold: f64,
    pub action: LimitAction,
}

/// Every event the audit log records. All but `Override` change the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "payload", rename_all = "snake_case")]
pub enum Action {
    RegisterModel(ModelRecord),
    RegisterProduct(ProductRecord),
    SetStatus { id: String, status: ModelStatus },
    SetMapping(MappingRecord),
    SetLimit(RiskLimit),
    Override { product_family: String, model_id: String, reason: String },
}

/// Flat-file inventory. Mutate it through [`InventoryStore::apply`] so every
/// change has a matching audit event.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryStore {
    #[serde(default)]
    pub models: Vec<ModelRecord>,
    #[serde(default)]
    pub products: Vec<ProductRecord>,
    #[serde(default)]
    pub mappings: Vec<MappingRecord>,
    #[serde(default)]
    pub limits: Vec<RiskLimit>,
}

impl InventoryStore {
    pub fn model(&self, id: &str) -> Result<&ModelRecord, GovernanceError> {
        self.models
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| GovernanceError::UnknownId(id.to_string()))
    }

    pub fn product(&self, id: &str) -> Result<&ProductRecord, GovernanceError> {
        self.products
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| GovernanceError::UnknownId(id.to_string()))
    }

    pub fn has_family(&self, family: &str) -> bool {
        self.products.iter().any(|p| p.family == family)
    }

    /// Applies one event, leaving the store untouched if it is rejected.
    pub fn apply(&mut self, action: &Action) -> Result<(), GovernanceError> {
        match action {
            Action::RegisterModel(m) => {
                if !(1..=3).contains(&m.risk_tier) {
                    return Err(GovernanceError::Invalid(format!("risk_tier must be 1-3, got {}", m.risk_tier)));
                }
                if m.review_period_months == 0 {
                    return Err(GovernanceError::Invalid("review_period_months must be > 0".into()));
                }
                if m.id.is_empty() || self.models.iter().any(|x| x.id == m.id) {
                    return Err(GovernanceError::Duplicate(m.id.clone()));
                }
                self.models.push(m.clone());
            }
            Action::RegisterProduct(p) => {
                if !(p.max_maturity > 0.0) {
                    return Err(GovernanceError::Invalid(format!("max_maturity must be > 0, got {}", p.max_maturity)));
                }
                if p.id.is_empty() || self.products.iter().any(|x| x.id == p.id) {
                    return Err(GovernanceError::Duplicate(p.id.clone()));
                }
                self.products.push(p.clone());
            }
            Action::SetStatus { id, status } => {
                let m = self
                    .models
                    .iter_mut()
                    .find(|m| &m.id == id)
                    .ok_or_else(|| GovernanceError::UnknownId(id.clone()))?;
                if !m.status.can_become(*status) {
                    return Err(GovernanceError::IllegalTransition {
                        id: id.clone(),
                        from: m.status,
                        to: *status,
                    });
                }
                m.status = *status;
            }
            Action::SetMapping(r) => {
                self.model(&r.model_id)?;
                if !self.has_family(&r.product_family) {
                    return Err(GovernanceError::UnknownId(r.product_family.clone()));
                }
                match self
                    .mappings
                    .iter_mut()
                    .find(|x| x.product_family == r.product_family && x.model_id == r.model_id)
                {
                    Some(existing) => existing.status = r.status,
                    None => self.mappings.push(r.clone()),
                }
            }
            Action::SetLimit(l) => {
                if !(l.threshold > 0.0 && l.threshold.is_finite()) {
                    return Err(GovernanceError::Invalid(format!("threshold must be > 0, got {}", l.threshold)));
                }
                match self.limits.iter_mut().find(|x| x.metric == l.metric && x.action == l.action) {
                    Some(existing) => *existing = l.clone(),
                    None => self.limits.push(l.clone()),
                }
            }
            Action::Override { .. } => {}
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("store serialises")
    }
}
