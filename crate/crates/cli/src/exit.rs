use std::fmt;

pub const SUCCESS: u8 = 0;
pub const RUNTIME: u8 = 1;
pub const GOVERNANCE_BLOCK: u8 = 2;
pub const CONFIG: u8 = 3;
pub const LIMIT_BREACH: u8 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(e: impl fmt::Display) -> Self {
        Self {
            code: CONFIG,
            message: e.to_string(),
        }
    }

    pub fn blocked(e: impl fmt::Display) -> Self {
        Self {
            code: GOVERNANCE_BLOCK,
            message: e.to_string(),
        }
    }

    pub fn runtime(e: impl fmt::Display) -> Self {
        Self {
            code: RUNTIME,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<mrisk_core::engine::EngineError> for Failure {
    fn from(e: mrisk_core::engine::EngineError) -> Self {
        Self::config(e)
    }
}

impl From<mrisk_core::fva::FvaError> for Failure {
    fn from(e: mrisk_core::fva::FvaError) -> Self {
        Self::config(e)
    }
}

impl From<mrisk_core::governance::GovernanceError> for Failure {
    fn from(e: mrisk_core::governance::GovernanceError) -> Self {
        use mrisk_core::governance::GovernanceError;
        match e {
            GovernanceError::Io { .. } => Self::runtime(e),
            _ => Self::config(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(e)
    }
}
