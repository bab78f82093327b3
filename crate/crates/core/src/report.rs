//! Machine-readable verdicts for inequality checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Report schema version.
pub const SCHEMA: u32 = 1;

/// Headline numbers of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub constant: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Verdict of one inequality check with per-member detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub schema: u32,
    pub inequality: String,
    pub mode: String,
    pub parameters: BTreeMap<String, Value>,
    pub per_member: Vec<Value>,
    pub summary: Summary,
}

impl InequalityReport {
    pub fn new(inequality: impl Into<String>, mode: impl Into<String>) -> Self {
        Self {
            schema: SCHEMA,
            inequality: inequality.into(),
            mode: mode.into(),
            parameters: BTreeMap::new(),
            per_member: Vec::new(),
            summary: Summary {
                constant: f64::NAN,
                slack: f64::NAN,
                pass: false,
            },
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    pub fn member(&mut self, value: impl Serialize) {
        self.per_member
            .push(serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn with_summary(mut self, constant: f64, slack: f64, pass: bool) -> Self {
        self.summary = Summary {
            constant,
            slack,
            pass,
        };
        self
    }

    /// Pretty JSON body; deterministic because every map is ordered.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
