//! `dfocus saliency`: compute |∂score/∂input| for a model and image, or
//! import a precomputed gradient volume, then min-max normalize (unless
//! `--raw`) and write the map as a float64 NIfTI volume.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use dfocus_core::model::load_model;
use dfocus_core::nifti::read_volume;
use dfocus_core::saliency::{
    compute_saliency, export_saliency, import_saliency, min_max_normalize,
};

use crate::commands::Globals;
use crate::manifest::RunManifest;
use crate::output::write_sidecar;

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    /// Input image volume (.nii or .nii.gz); required with --model.
    #[arg(long)]
    pub image: Option<PathBuf>,

    /// Model description JSON (see the model file schema in the docs).
    #[arg(long, conflicts_with = "import")]
    pub model: Option<PathBuf>,

    /// Import a gradient volume computed elsewhere instead of scoring a
    /// model. Importers beware: in-process gradients are taken of the raw
    /// pre-activation score.
    #[arg(long)]
    pub import: Option<PathBuf>,

    /// The imported volume already holds gradient magnitudes (skip |·|).
    #[arg(long, requires = "import")]
    pub already_absolute: bool,

    /// Write the unnormalized magnitude map.
    #[arg(long)]
    pub raw: bool,
}

pub fn run(args: SaliencyArgs, globals: &Globals) -> Result<()> {
    let out = globals.required_out("saliency")?.clone();
    let mut manifest = RunManifest::new("saliency", globals.timestamp);
    manifest.parameter("raw", args.raw);

    let map = match (&args.model, &args.import) {
        (Some(model_path), None) => {
            let image_path = match &args.image {
                Some(p) => p,
                None => bail!("--model needs --image"),
            };
            let model = load_model(model_path)?;
            let image = read_volume(image_path)?;
            manifest.input("model", model_path)?;
            manifest.input("image", image_path)?;
            manifest.parameter("model_id", model.id());
            compute_saliency(model.as_ref(), &image)?
        }
        (None, Some(import_path)) => {
            manifest.input("gradient", import_path)?;
            manifest.parameter("already_absolute", args.already_absolute);
            import_saliency(import_path, args.already_absolute)?
        }
        (None, None) => bail!("pass either --model (with --image) or --import"),
        (Some(_), Some(_)) => unreachable!("clap forbids --model with --import"),
    };

    let map = if args.raw {
        map
    } else {
        min_max_normalize(map)
    };
    if map.is_constant() {
        eprintln!("warning: constant saliency map; normalized output is all zeros");
    }
    export_saliency(&map, &out).context("writing saliency volume")?;
    manifest.parameter("normalized", map.is_normalized());
    manifest.parameter("source", map.source());
    write_sidecar(&manifest, &out)?;
    Ok(())
}
