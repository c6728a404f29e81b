//! Run manifests written next to every generated artifact.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{snapshot::snapshot_bytes, ChannelGraph, SnapshotFormat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: &str, graph: Option<&ChannelGraph>, seed: Option<u64>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(config.as_bytes()),
            graph_sha256: graph.map(graph_sha256),
            seed,
            timestamp: timestamp(),
        }
    }

    /// Equal iff everything but the timestamp matches.
    pub fn same_inputs(&self, other: &RunManifest) -> bool {
        RunManifest { timestamp: 0, ..self.clone() } == RunManifest { timestamp: 0, ..other.clone() }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical JSON snapshot, or of the policy records when the
/// graph cannot be written as a snapshot.
pub fn graph_sha256(graph: &ChannelGraph) -> String {
    match snapshot_bytes(graph, SnapshotFormat::Json) {
        Ok(bytes) => sha256_hex(&bytes),
        Err(_) => {
            let text: String = graph.records().map(|r| format!("{r:?}\n")).collect();
            sha256_hex(text.as_bytes())
        }
    }
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}
