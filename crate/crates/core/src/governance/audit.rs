use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::checks::{check_mapping, MappingVerdict};
use super::records::{Action, InventoryStore, MappingRecord, ModelRecord, ModelStatus, ProductRecord, RiskLimit};
use super::GovernanceError;

pub fn actor_from_env() -> String {
    std::env::var("MRISK_USER")
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "anonymous".to_string())
}

/// One audit line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub timestamp: String,
    pub actor: String,
    pub action: String,
    pub payload: Value,
}

impl AuditEntry {
    pub fn new(actor: &str, action: &Action) -> Self {
        let value = serde_json::to_value(action).expect("action serialises");
        Self {
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Micros, true),
            actor: actor.to_string(),
            action: value["action"].as_str().unwrap_or_default().to_string(),
            payload: value.get("payload").cloned().unwrap_or(Value::Null),
        }
    }

    pub fn to_action(&self) -> Result<Action, serde_json::Error> {
        serde_json::from_value(serde_json::json!({ "action": self.action, "payload": self.payload }))
    }
}

/// Append-only JSON-lines log.
#[derive(Debug, Clone)]
pub struct AuditLog {
    path: PathBuf,
}

impl AuditLog {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &AuditEntry) -> Result<(), GovernanceError> {
        let io = |e: std::io::Error| GovernanceError::Io {
            path: self.path.display().to_string(),
            message: e.to_string(),
        };
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        let line = serde_json::to_string(entry).expect("entry serialises");
        writeln!(file, "{line}").map_err(io)
    }

    /// All entries in order; a missing file is an empty log.
    pub fn entries(&self) -> Result<Vec<AuditEntry>, GovernanceError> {
        let text = match fs::read_to_string(&self.path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => {
                return Err(GovernanceError::Io {
                    path: self.path.display().to_string(),
                    message: e.to_string(),
                })
            }
        };
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| GovernanceError::Parse {
                    path: format!("{}:{}", self.path.display(), i + 1),
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// Rebuilds a store by applying every logged event to an empty one.
    pub fn replay(&self) -> Result<InventoryStore, GovernanceError> {
        let mut store = InventoryStore::default();
        for (i, entry) in self.entries()?.iter().enumerate() {
            let action = entry.to_action().map_err(|e| GovernanceError::Parse {
                path: format!("{}:{}", self.path.display(), i + 1),
                message: e.to_string(),
            })?;
            store.apply(&action)?;
        }
        Ok(store)
    }
}

/// Outcome of the pricing gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Authorization {
    pub verdict: MappingVerdict,
    pub proceed: bool,
    pub overridden: bool,
}

/// Store file plus audit log. Single writer: concurrent mutation of the same
/// files is not supported.
#[derive(Debug, Clone)]
pub struct Inventory {
    store: InventoryStore,
    store_path: PathBuf,
    log: AuditLog,
    actor: String,
}

impl Inventory {
    /// Opens the store at `store_path`, or starts empty if the file is absent.
    pub fn open(store_path: impl Into<PathBuf>, audit_path: impl Into<PathBuf>) -> Result<Self, GovernanceError> {
        let store_path = store_path.into();
        let store = match fs::read_to_string(&store_path) {
            Ok(text) => InventoryStore::from_json(&text).map_err(|e| GovernanceError::Parse {
                path: store_path.display().to_string(),
                message: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => InventoryStore::default(),
            Err(e) => {
                return Err(GovernanceError::Io {
                    path: store_path.display().to_string(),
                    message: e.to_string(),
                })
            }
        };
        Ok(Self {
            store,
            store_path,
            log: AuditLog::new(audit_path),
            actor: actor_from_env(),
        })
    }

    pub fn with_actor(mut self, actor: impl Into<String>) -> Self {
        self.actor = actor.into();
        self
    }

    pub fn store(&self) -> &InventoryStore {
        &self.store
    }

    pub fn log(&self) -> &AuditLog {
        &self.log
    }

    fn commit(&mut self, action: Action) -> Result<(), GovernanceError> {
        let mut next = self.store.clone();
        next.apply(&action)?;
        self.log.append(&AuditEntry::new(&self.actor, &action))?;
        self.store = next;
        self.save()
    }

    fn save(&self) -> Result<(), GovernanceError> {
        fs::write(&self.store_path, self.store.to_json() + "\n").map_err(|e| GovernanceError::Io {
            path: self.store_path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn register_model(&mut self, record: ModelRecord) -> Result<String, GovernanceError> {
        let id = record.id.clone();
        self.commit(Action::RegisterModel(record))?;
        Ok(id)
    }

    pub fn register_product(&mut self, record: ProductRecord) -> Result<String, GovernanceError> {
        let id = record.id.clone();
        self.commit(Action::RegisterProduct(record))?;
        Ok(id)
    }

    pub fn set_status(&mut self, id: &str, status: ModelStatus) -> Result<ModelRecord, GovernanceError> {
        self.commit(Action::SetStatus {
            id: id.to_string(),
            status,
        })?;
        self.store.model(id).cloned()
    }

    pub fn set_mapping(&mut self, record: MappingRecord) -> Result<(), GovernanceError> {
        self.commit(Action::SetMapping(record))
    }

    pub fn set_limit(&mut self, limit: RiskLimit) -> Result<(), GovernanceError> {
        self.commit(Action::SetLimit(limit))
    }

    /// Records that a blocking check was bypassed. The store is unchanged.
    pub fn log_override(&self, product_family: &str, model_id: &str, reason: &str) -> Result<(), GovernanceError> {
        self.log.append(&AuditEntry::new(
            &self.actor,
            &Action::Override {
                product_family: product_family.to_string(),
                model_id: model_id.to_string(),
                reason: reason.to_string(),
            },
        ))
    }

    /// Checks the mapping before a pricing run. A blocked mapping proceeds
    /// only with `allow_override`, and the override is written to the log.
    pub fn authorize(
        &self,
        product_family: &str,
        model_id: &str,
        allow_override: bool,
    ) -> Result<Authorization, GovernanceError> {
        let verdict = check_mapping(product_family, model_id, &self.store)?;
        match &verdict {
            MappingVerdict::Blocked(reason) if allow_override => {
                self.log_override(product_family, model_id, reason)?;
                Ok(Authorization {
                    verdict,
                    proceed: true,
                    overridden: true,
                })
            }
            MappingVerdict::Blocked(_) => Ok(Authorization {
                verdict,
                proceed: false,
                overridden: false,
            }),
            _ => Ok(Authorization {
                verdict,
                proceed: true,
                overridden: false,
            }),
        }
    }
}
