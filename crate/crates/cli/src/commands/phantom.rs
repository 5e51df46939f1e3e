//! `dfocus phantom`: render a synthetic phantom into an output directory —
//! image volume, label volume, region table, optionally the resolved spec
//! and synthetic saliency maps with known per-region medians.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use dfocus_core::nifti::write_volume;
use dfocus_core::phantom::{
    make_focused_saliency, make_phantom, standard_regions_c1, standard_regions_spec, PhantomSpec,
};
use dfocus_core::saliency::export_saliency;
use dfocus_core::tables::region_table_to_tsv;
use dfocus_core::volume::ScalarKind;

use crate::commands::Globals;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Phantom spec JSON (see the schema in the docs).
    #[arg(long, conflicts_with = "standard_regions")]
    pub spec: Option<PathBuf>,

    /// Use the built-in standard-regions phantom.
    #[arg(long)]
    pub standard_regions: bool,

    /// Directory for the generated files.
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Also write the resolved spec as spec.json.
    #[arg(long)]
    pub dump_spec: bool,

    /// Emit a synthetic saliency map focused on these regions (repeatable).
    #[arg(long = "saliency-focus", value_name = "REGION")]
    pub saliency_focus: Vec<String>,

    /// Focus the saliency maps on the built-in C1 region set.
    #[arg(long)]
    pub saliency_c1: bool,

    /// Emit flat saliency maps (background level everywhere).
    #[arg(long, conflicts_with_all = ["saliency_c1", "saliency_focus"])]
    pub saliency_uniform: bool,

    /// Saliency level inside focus regions.
    #[arg(long, default_value_t = 0.9)]
    pub focus_level: f64,

    /// Saliency level everywhere else.
    #[arg(long, default_value_t = 0.1)]
    pub background_level: f64,

    /// Uniform jitter amplitude added to the levels (clamped to [0, 1]).
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,

    /// How many saliency maps to emit (seeded seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    pub saliency_count: usize,
}

pub fn run(args: PhantomArgs, globals: &Globals) -> Result<()> {
    let spec: PhantomSpec = if args.standard_regions {
        standard_regions_spec()
    } else if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading phantom spec {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing phantom spec {}", path.display()))?
    } else {
        bail!("pass --spec <file> or --standard-regions");
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let (image, labels) = make_phantom(&spec)?;
    let image_path = args.out_dir.join("image.nii.gz");
    let labels_path = args.out_dir.join("labels.nii.gz");
    let regions_path = args.out_dir.join("regions.tsv");

    write_volume(&image, &image_path, ScalarKind::F32)?;
    write_volume(labels.grid(), &labels_path, ScalarKind::I32)?;
    let table = region_table_to_tsv(labels.regions().map(|(id, name)| (id, name.to_string())));
    std::fs::write(&regions_path, table)
        .with_context(|| format!("writing {}", regions_path.display()))?;

    let mut manifest = RunManifest::new("phantom", globals.timestamp);
    manifest
        .parameter("standard_regions", args.standard_regions)
        .parameter("dims", serde_json::to_value(spec.dims)?)
        .parameter("regions", spec.regions.len())
        .parameter("noise_sigma", spec.noise_sigma)
        .parameter("spec_seed", spec.seed);
    if let Some(path) = &args.spec {
        manifest.input("spec", path)?;
    }

    if args.dump_spec {
        let spec_path = args.out_dir.join("spec.json");
        let mut text = serde_json::to_string_pretty(&spec)?;
        text.push('\n');
        std::fs::write(&spec_path, text)
            .with_context(|| format!("writing {}", spec_path.display()))?;
    }

    let wants_saliency =
        args.saliency_c1 || args.saliency_uniform || !args.saliency_focus.is_empty();
    if wants_saliency {
        let focus: BTreeSet<String> = if args.saliency_uniform {
            BTreeSet::new()
        } else if args.saliency_c1 {
            standard_regions_c1()
        } else {
            args.saliency_focus.iter().cloned().collect()
        };
        manifest
            .parameter("saliency_count", args.saliency_count)
            .parameter("focus_level", args.focus_level)
            .parameter("background_level", args.background_level)
            .parameter("jitter", args.jitter)
            .parameter(
                "saliency_focus",
                serde_json::to_value(focus.iter().collect::<Vec<_>>())?,
            );
        for i in 0..args.saliency_count {
            let map = make_focused_saliency(
                &labels,
                &focus,
                args.focus_level,
                args.background_level,
                args.jitter,
                globals.seed + i as u64,
            )?;
            let path = args.out_dir.join(format!("saliency-{i:03}.nii.gz"));
            export_saliency(&map, &path)?;
        }
    }

    let manifest_path = args.out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&manifest_path, text)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    Ok(())
}
