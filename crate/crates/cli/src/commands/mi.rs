//! `dfocus mi`: mutual-information ranking of volumetric features with
//! disease-focus scoring of the mapped regions.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use dfocus_core::mutinfo::{load_feature_csv, rank_features, ranking_to_csv, MiRanking};

use crate::commands::{load_categories, Globals};
use crate::manifest::RunManifest;
use crate::output::{emit_csv, emit_json, ReportEnvelope};

#[derive(Debug, Args)]
pub struct MiArgs {
    /// Feature CSV: header of feature names plus a `label` column.
    #[arg(long)]
    pub features: PathBuf,

    /// Category table TSV; defaults to the bundled table.
    #[arg(long)]
    pub categories: Option<PathBuf>,

    /// Number of equal-frequency bins for the MI estimator.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,

    /// Override map TSV (feature<TAB>region) for names that do not follow
    /// the region + statistic-suffix convention.
    #[arg(long)]
    pub region_map: Option<PathBuf>,

    /// Also write the CSV projection here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn load_region_overrides(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading region map {}", path.display()))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let feature = fields.next().unwrap_or("").trim();
        let region = fields.next().map(str::trim).unwrap_or("");
        if feature.is_empty() || region.is_empty() {
            anyhow::bail!(
                "{}:{}: expected feature<TAB>region",
                path.display(),
                idx + 1
            );
        }
        map.insert(feature.to_string(), region.to_string());
    }
    Ok(map)
}

#[derive(Serialize)]
struct MiPayload {
    mi: MiRanking,
}

pub fn run(args: MiArgs, globals: &Globals) -> Result<()> {
    let categories = load_categories(args.categories.as_ref())?;
    let matrix = load_feature_csv(&args.features)?;
    let overrides = match &args.region_map {
        Some(path) => Some(load_region_overrides(path)?),
        None => None,
    };

    let ranking = rank_features(
        &matrix,
        &categories,
        args.bins,
        globals.top_k,
        overrides.as_ref(),
    )?;
    for warning in &ranking.warnings {
        eprintln!("warning: {warning}");
    }

    let mut manifest = RunManifest::new("mi", globals.timestamp);
    manifest.input("features", &args.features)?;
    if let Some(path) = &args.categories {
        manifest.input("categories", path)?;
    }
    if let Some(path) = &args.region_map {
        manifest.input("region_map", path)?;
    }
    manifest
        .parameter("bins", args.bins)
        .parameter("top_k", globals.top_k)
        .parameter("subjects", matrix.n_subjects())
        .parameter("features", matrix.n_features());

    emit_csv(&ranking_to_csv(&ranking), args.csv.as_deref())?;
    emit_json(
        &ReportEnvelope {
            manifest,
            payload: MiPayload { mi: ranking },
        },
        globals.out.as_deref(),
    )
}
