use chrono::{Months, NaiveDate};
use serde::Serialize;

use super::records::{InventoryStore, LimitAction, LimitMetric, MappingStatus, ModelStatus, ProductRecord, RiskLimit};
use super::GovernanceError;
use crate::products::{GreeksReport, Product};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum MappingVerdict {
    Allowed,
    /// Pricing proceeds but the reason is reported.
    Warn(String),
    Blocked(String),
}

impl MappingVerdict {
    pub fn is_blocked(&self) -> bool {
        matches!(self, Self::Blocked(_))
    }
}

/// Candidate models are blocked until approved.
pub fn check_mapping(
    product_family: &str,
    model_id: &str,
    store: &InventoryStore,
) -> Result<MappingVerdict, GovernanceError> {
    let model = store.model(model_id)?;
    if !store.has_family(product_family) {
        return Err(GovernanceError::UnknownId(product_family.to_string()));
    }
    match model.status {
        ModelStatus::Decommissioned => return Ok(MappingVerdict::Blocked("model decommissioned".into())),
        ModelStatus::Candidate => return Ok(MappingVerdict::Blocked("model not approved (candidate)".into())),
        _ => {}
    }
    let mapping = store
        .mappings
        .iter()
        .find(|m| m.product_family == product_family && m.model_id == model_id);
    Ok(match (mapping.map(|m| m.status), model.status) {
        (None, _) => MappingVerdict::Blocked(format!("no mapping for {product_family} to {model_id}")),
        (Some(MappingStatus::Blocked), _) => MappingVerdict::Blocked("mapping blocked".into()),
        (Some(MappingStatus::Allowed), ModelStatus::Restricted) => MappingVerdict::Warn("model restricted".into()),
        (Some(MappingStatus::Allowed), _) => MappingVerdict::Allowed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DueReview {
    pub model_id: String,
    pub due: NaiveDate,
    pub days_overdue: i64,
}

/// Models whose review date has passed, most overdue first. Decommissioned
/// models are not reviewed.
pub fn due_reviews(store: &InventoryStore, as_of: NaiveDate) -> Vec<DueReview> {
    let mut due: Vec<DueReview> = store
        .models
        .iter()
        .filter(|m| m.status != ModelStatus::Decommissioned)
        .filter_map(|m| {
            let date = m
                .last_validation
                .checked_add_months(Months::new(m.review_period_months))?;
            (as_of > date).then(|| DueReview {
                model_id: m.id.clone(),
                due: date,
                days_overdue: (as_of - date).num_days(),
            })
        })
        .collect();
    due.sort_by(|a, b| b.days_overdue.cmp(&a.days_overdue).then_with(|| a.model_id.cmp(&b.model_id)));
    due
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breach {
    pub metric: LimitMetric,
    pub value: f64,
    pub threshold: f64,
    pub action: LimitAction,
}

impl Breach {
    pub fn is_blocking(&self) -> bool {
        self.action == LimitAction::Block
    }
}

/// Compares absolute sensitivities against limits.
pub fn check_limits(report: &GreeksReport, limits: &[RiskLimit]) -> Result<Vec<Breach>, GovernanceError> {
    let mut breaches = Vec::new();
    for limit in limits {
        let value = match limit.metric {
            LimitMetric::Gamma => report.gamma.value,
            LimitMetric::Vanna => report.vanna.value,
            LimitMetric::CorrelationSensitivity => report
                .correlation_sensitivity
                .as_ref()
                .map(|g| g.value)
                .ok_or(GovernanceError::MissingMetric(limit.metric))?,
        };
        if value.abs() > limit.threshold {
            breaches.push(Breach {
                metric: limit.metric,
                value,
                threshold: limit.threshold,
                action: limit.action,
            });
        }
    }
    Ok(breaches)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureViolation {
    Maturity { maturity: f64, max_maturity: f64 },
    ForwardStart { start_time: f64 },
}

pub fn restrict_features(product: &Product, record: &ProductRecord) -> Vec<FeatureViolation> {
    let mut out = Vec::new();
    let maturity = product.horizon();
    if maturity > record.max_maturity + 1e-9 {
        out.push(FeatureViolation::Maturity {
            maturity,
            max_maturity: record.max_maturity,
        });
    }
    if product.is_forward_start() && !record.forward_start_allowed {
        let start_time = match product {
            Product::Autocallable(a) => a.start_time,
            _ => 0.0,
        };
        out.push(FeatureViolation::ForwardStart { start_time });
    }
    out
}
