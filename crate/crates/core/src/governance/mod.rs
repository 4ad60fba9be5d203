//! Model inventory: lifecycle status, product-model mappings, feature and
//! risk limits, and an append-only audit log.

mod audit;
mod checks;
mod records;

pub use audit::{actor_from_env, AuditEntry, AuditLog, Authorization, Inventory};
pub use checks::{
    check_limits, check_mapping, due_reviews, restrict_features, Breach, DueReview, FeatureViolation, MappingVerdict,
};
pub use records::{
    Action, InventoryStore, LimitAction, LimitMetric, MappingRecord, MappingStatus, ModelRecord, ModelStatus,
    ProductRecord, RiskLimit,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GovernanceError {
    #[error("illegal status transition for {id}: {from} -> {to}")]
    IllegalTransition {
        id: String,
        from: ModelStatus,
        to: ModelStatus,
    },
    #[error("unknown id: {0}")]
    UnknownId(String),
    #[error("duplicate id: {0}")]
    Duplicate(String),
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("configuration error: limit on {0} but the report has no such metric")]
    MissingMetric(LimitMetric),
}
