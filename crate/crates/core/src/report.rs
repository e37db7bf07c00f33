// Licensed under the Apache-2.0 license

//! Machine-readable report envelope shared by every CLI command.
//!
//! The envelope is JSON. `payload.kind` names the report type and
//! `payload.report` holds it; see `docs/report-schema.md` for the fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::attack::MutationRecord;
use crate::boot::BootReport;
use crate::crypto::{sha256_digest, Digest256};
use crate::recovery::RecoveryReport;
use crate::timing::CostReport;
use crate::verify::ChainReport;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportInputs {
    /// Input role to path, e.g. `"image" -> "fw.care"`.
    pub paths: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// Input role to SHA-256 of the file contents.
    pub input_digests: BTreeMap<String, Digest256>,
    /// Remaining arguments that affect the result.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub options: BTreeMap<String, String>,
}

impl ReportInputs {
    pub fn add_file(&mut self, role: &str, path: &str, contents: &[u8]) {
        self.paths.insert(role.to_string(), path.to_string());
        self.input_digests
            .insert(role.to_string(), sha256_digest(contents));
    }

    pub fn add_option(&mut self, name: &str, value: impl ToString) {
        self.options.insert(name.to_string(), value.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub attacks: Vec<MutationRecord>,
    pub boot: BootReport,
    pub flash_matches_golden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "report")]
pub enum ReportPayload {
    Boot(BootReport),
    Simulation(SimulationReport),
    Chain(ChainReport),
    Recovery(RecoveryReport),
    Cost(CostReport<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub tool_version: String,
    pub command: String,
    pub inputs: ReportInputs,
    pub payload: ReportPayload,
}

impl ReportEnvelope {
    pub fn new(command: &str, inputs: ReportInputs, payload: ReportPayload) -> Self {
        ReportEnvelope {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            inputs,
            payload,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
