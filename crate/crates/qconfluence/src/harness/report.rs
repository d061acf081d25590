//! Machine-readable run report.

use crate::harness::config::ExperimentConfig;
use crate::solutions::ConfluenceRow;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// One named check of the invariant suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: String,
    pub q: Option<f64>,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl InvariantResult {
    /// Passes when `value < threshold` (and `value` is a number).
    pub fn below(name: impl Into<String>, q: Option<f64>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            q,
            value,
            threshold,
            passed: value < threshold,
            detail: String::new(),
        }
    }

    pub fn flag(name: impl Into<String>, q: Option<f64>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            q,
            value: if passed { 0.0 } else { 1.0 },
            threshold: 0.5,
            passed,
            detail: detail.into(),
        }
    }

    /// Record a measured value on a flag without changing its verdict.
    pub fn with_value(mut self, value: f64) -> Self {
        self.value = value;
        self.threshold = f64::NAN;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub passed: bool,
    pub confluence: Vec<ConfluenceRow>,
    pub invariants: Vec<InvariantResult>,
    pub timing: Vec<Timing>,
    pub provenance: Provenance,
    /// The effective configuration, enough to re-run the command.
    pub config: Option<ExperimentConfig>,
    pub notes: Vec<String>,
}

/// SHA-256 of the canonical TOML form of a configuration.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let text = toml::to_string(cfg).unwrap_or_else(|_| format!("{cfg:?}"));
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn new(command: &str, cfg: Option<&ExperimentConfig>) -> Self {
        Self {
            command: command.into(),
            passed: true,
            confluence: vec![],
            invariants: vec![],
            timing: vec![],
            provenance: Provenance {
                config_sha256: cfg.map(config_hash).unwrap_or_default(),
                crate_version: env!("CARGO_PKG_VERSION").into(),
            },
            config: cfg.cloned(),
            notes: vec![],
        }
    }

    pub fn push(&mut self, r: InvariantResult) {
        self.passed &= r.passed;
        self.invariants.push(r);
    }

    pub fn time(&mut self, phase: &str, start: std::time::Instant) {
        self.timing.push(Timing {
            phase: phase.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
