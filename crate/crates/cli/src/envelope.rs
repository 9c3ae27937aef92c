use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub config: RunConfig,
    pub version: String,
    pub wall_clock_seconds: f64,
    /// Scalars, small tables and file references.
    pub outputs: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
}

impl ResultEnvelope {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
