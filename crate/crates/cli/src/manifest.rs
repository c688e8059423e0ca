use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Record of one command run, written as `manifest.json` next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    /// Effective configuration after command-line overrides.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, inputs: BTreeMap<String, String>, config: &C, seed: Option<u64>) -> Self {
        let config = serde_json::to_value(config).expect("configuration serializes");
        RunManifest {
            command: command.into(),
            inputs,
            config_hash: config_hash(&config),
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }
}

/// Object keys are sorted by `serde_json::Value`, so the hash does not depend
/// on key order in the source document.
pub fn config_hash(config: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config).expect("value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"seed": 1, "warmup": 2, "nested": {"x": 1, "y": 2}}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"nested": {"y": 2, "x": 1}, "warmup": 2, "seed": 1}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let c: serde_json::Value = serde_json::from_str(r#"{"seed": 2, "warmup": 2, "nested": {"x": 1, "y": 2}}"#).unwrap();
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
