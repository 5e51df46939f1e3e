//! Run manifests: every report records the tool version, resolved
//! parameters, and a SHA-256 digest of each input file.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, InputRecord>,
    /// RFC 3339; omitted under `--no-timestamp` so reports are
    /// byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, with_timestamp: bool) -> Self {
        RunManifest {
            tool: "dfocus",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            timestamp: with_timestamp
                .then(|| Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)),
        }
    }

    pub fn parameter(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    /// Digest and record an input file under a role name.
    pub fn input(&mut self, role: &str, path: impl AsRef<Path>) -> Result<&mut Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading input {} for digest", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(
            role.to_string(),
            InputRecord {
                path: path.display().to_string(),
                sha256: hex,
            },
        );
        Ok(self)
    }
}
