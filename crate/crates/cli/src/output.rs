//! Report emission: JSON to stdout or `--out`, optional CSV projection,
//! sidecar manifests for volume outputs.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::manifest::RunManifest;

/// Wrap a report with its manifest; the payload key names the report kind.
#[derive(Serialize)]
pub struct ReportEnvelope<T: Serialize> {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub payload: T,
}

/// Pretty-printed JSON to `--out` or stdout.
pub fn emit_json<T: Serialize>(envelope: &ReportEnvelope<T>, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(envelope).context("serializing report")?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Write a CSV projection when requested.
pub fn emit_csv(csv: &str, path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, csv).with_context(|| format!("writing CSV to {}", path.display()))?;
    }
    Ok(())
}

/// Sidecar manifest path for a volume output: `<out>.manifest.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Write a sidecar manifest next to a volume output.
pub fn write_sidecar(manifest: &RunManifest, out: &Path) -> Result<()> {
    let path = sidecar_path(out);
    let mut text = serde_json::to_string_pretty(manifest).context("serializing manifest")?;
    text.push('\n');
    std::fs::write(&path, text)
        .with_context(|| format!("writing manifest to {}", path.display()))?;
    Ok(())
}
