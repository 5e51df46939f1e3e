//! `dfocus metrics`: the classification metric suite over a predictions CSV
//! (`subject_id,true_label,score`).

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use dfocus_core::metrics::{evaluate, load_predictions_csv, report_to_csv, MetricReport};

use crate::commands::Globals;
use crate::manifest::RunManifest;
use crate::output::{emit_csv, emit_json, ReportEnvelope};

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Predictions CSV with header subject_id,true_label,score.
    #[arg(long)]
    pub predictions: PathBuf,

    /// Decision threshold (score >= threshold predicts positive).
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,

    /// Also write the one-row CSV projection here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct MetricsPayload {
    metrics: MetricReport,
}

pub fn run(args: MetricsArgs, globals: &Globals) -> Result<()> {
    let records = load_predictions_csv(&args.predictions)?;
    let report = evaluate(&records, args.threshold)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    let mut manifest = RunManifest::new("metrics", globals.timestamp);
    manifest.input("predictions", &args.predictions)?;
    manifest
        .parameter("threshold", args.threshold)
        .parameter("records", records.len());

    emit_csv(&report_to_csv(&report), args.csv.as_deref())?;
    emit_json(
        &ReportEnvelope {
            manifest,
            payload: MetricsPayload { metrics: report },
        },
        globals.out.as_deref(),
    )
}
