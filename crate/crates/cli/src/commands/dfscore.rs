//! `dfocus dfscore`: disease-focus reports for a cohort of saliency maps
//! grouped by classification outcome.
//!
//! The cohort file is a TSV with one map per line:
//!
//! ```text
//! saliency-path<TAB>outcome[<TAB>label-volume<TAB>region-table]
//! ```
//!
//! `outcome` is TP, TN, FP, FN or ALL. Rows without their own label map use
//! `--labels`/`--regions`. Relative paths resolve against the cohort file's
//! directory. Input maps must already be on the normalized [0, 1] scale
//! (what `dfocus saliency` writes); pass `--normalize` to min-max normalize
//! raw magnitude volumes on the way in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use dfocus_core::nifti::read_volume;
use dfocus_core::region::{
    cohort_analysis, reports_to_csv, AggregationMode, CohortMember, CohortOptions, DfReport,
    Outcome,
};
use dfocus_core::saliency::{min_max_normalize, SaliencyMap};
use dfocus_core::tables::load_label_map;
use dfocus_core::volume::LabelMap;

use crate::commands::{load_categories, Globals};
use crate::manifest::RunManifest;
use crate::output::{emit_csv, emit_json, ReportEnvelope};

#[derive(Debug, Args)]
pub struct DfscoreArgs {
    /// Cohort TSV: saliency path, outcome, optional per-row label map.
    #[arg(long)]
    pub cohort: PathBuf,

    /// Default label volume for rows without their own.
    #[arg(long, requires = "regions")]
    pub labels: Option<PathBuf>,

    /// Region table (id<TAB>name) naming the label volume's ids.
    #[arg(long)]
    pub regions: Option<PathBuf>,

    /// Category table TSV; defaults to the bundled table.
    #[arg(long)]
    pub categories: Option<PathBuf>,

    /// Cohort aggregation: pooled | per-image.
    #[arg(long, default_value = "pooled")]
    pub mode: String,

    /// Min-max normalize each input map (for raw gradient magnitudes).
    #[arg(long)]
    pub normalize: bool,

    /// Report the median saliency over background voxels per group.
    #[arg(long)]
    pub background_diagnostic: bool,

    /// Model identifier recorded in the reports.
    #[arg(long, default_value = "")]
    pub model_id: String,

    /// Also write the CSV projection (group, rank, region, ...) here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

struct CohortRow {
    saliency: PathBuf,
    outcome: Outcome,
    labels: Option<(PathBuf, PathBuf)>,
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let path = PathBuf::from(raw);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

fn parse_cohort_file(path: &Path) -> Result<Vec<CohortRow>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading cohort file {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 && fields.len() != 4 {
            bail!(
                "{}:{line_no}: expected 2 or 4 tab-separated fields, got {}",
                path.display(),
                fields.len()
            );
        }
        let outcome: Outcome = fields[1]
            .parse()
            .with_context(|| format!("{}:{line_no}", path.display()))?;
        let labels = if fields.len() == 4 {
            Some((resolve(base, fields[2]), resolve(base, fields[3])))
        } else {
            None
        };
        rows.push(CohortRow {
            saliency: resolve(base, fields[0]),
            outcome,
            labels,
        });
    }
    // An empty cohort surfaces as the analysis-level empty-group error.
    Ok(rows)
}

#[derive(Serialize)]
struct DfscorePayload {
    mode: AggregationMode,
    reports: Vec<DfReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

pub fn run(args: DfscoreArgs, globals: &Globals) -> Result<()> {
    let mode: AggregationMode = args.mode.parse()?;
    let categories = load_categories(args.categories.as_ref())?;
    let rows = parse_cohort_file(&args.cohort)?;

    let mut manifest = RunManifest::new("dfscore", globals.timestamp);
    manifest.input("cohort", &args.cohort)?;
    if let Some(path) = &args.categories {
        manifest.input("categories", path)?;
    }
    manifest
        .parameter("mode", mode.to_string())
        .parameter("top_k", globals.top_k)
        .parameter("normalize", args.normalize)
        .parameter("background_diagnostic", args.background_diagnostic)
        .parameter("model_id", args.model_id.clone());

    // Label maps are shared across rows; load each (volume, table) pair once.
    let default_labels = match (&args.labels, &args.regions) {
        (Some(vol), Some(table)) => {
            manifest.input("labels", vol)?;
            manifest.input("regions", table)?;
            Some((vol.clone(), table.clone()))
        }
        (None, Some(_)) => bail!("--regions needs --labels"),
        _ => None,
    };

    let mut label_arena: Vec<LabelMap> = Vec::new();
    let mut label_index: BTreeMap<(PathBuf, PathBuf), usize> = BTreeMap::new();
    let mut loaded: Vec<(SaliencyMap, Outcome, usize)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let key = match (&row.labels, &default_labels) {
            (Some(pair), _) => pair.clone(),
            (None, Some(pair)) => pair.clone(),
            (None, None) => bail!(
                "cohort row {} has no label map and no --labels/--regions default",
                i + 1
            ),
        };
        let labels_idx = match label_index.get(&key) {
            Some(&idx) => idx,
            None => {
                let map = load_label_map(&key.0, &key.1)?;
                label_arena.push(map);
                label_index.insert(key, label_arena.len() - 1);
                label_arena.len() - 1
            }
        };

        manifest.input(&format!("saliency[{i}]"), &row.saliency)?;
        let volume = read_volume(&row.saliency)?;
        let map = if args.normalize {
            min_max_normalize(SaliencyMap::from_gradient(
                volume,
                row.saliency.display().to_string(),
                false,
            ))
        } else {
            SaliencyMap::pre_normalized(volume, row.saliency.display().to_string()).with_context(
                || {
                    format!(
                        "{}: values outside [0, 1]; pass --normalize for raw maps",
                        row.saliency.display()
                    )
                },
            )?
        };
        loaded.push((map, row.outcome, labels_idx));
    }

    let members: Vec<CohortMember<'_>> = loaded
        .iter()
        .map(|(map, outcome, labels_idx)| CohortMember {
            saliency: map,
            outcome: *outcome,
            labels: &label_arena[*labels_idx],
        })
        .collect();

    let options = CohortOptions {
        mode,
        top_k: globals.top_k,
        model_id: args.model_id.clone(),
        background_diagnostic: args.background_diagnostic,
    };
    let analysis = cohort_analysis(&members, &categories, &options)?;
    for warning in &analysis.warnings {
        eprintln!("warning: {warning}");
    }
    for report in &analysis.reports {
        for region in &report.unknown_regions {
            eprintln!(
                "warning: region {region} not in the category table; scored C3 (group {})",
                report.group
            );
        }
    }

    emit_csv(&reports_to_csv(&analysis.reports), args.csv.as_deref())?;
    emit_json(
        &ReportEnvelope {
            manifest,
            payload: DfscorePayload {
                mode: analysis.mode,
                reports: analysis.reports,
                warnings: analysis.warnings,
            },
        },
        globals.out.as_deref(),
    )
}
