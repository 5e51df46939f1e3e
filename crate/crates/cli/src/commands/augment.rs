//! `dfocus augment`: apply augmentation transforms to a volume. When
//! several are requested they run in a fixed order: morphology, then crop,
//! then rotation. Output keeps the input's scalar kind unless overridden.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use dfocus_core::nifti::{read_volume, write_volume};
use dfocus_core::transforms::{
    grey_dilate, grey_erode, random_crop, random_rotate, StructuringElement,
};
use dfocus_core::volume::ScalarKind;

use crate::commands::Globals;
use crate::manifest::RunManifest;
use crate::output::write_sidecar;

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Input volume (.nii or .nii.gz).
    #[arg(long)]
    pub input: PathBuf,

    /// Grey dilation (neighborhood maximum).
    #[arg(long, conflicts_with = "erode")]
    pub dilate: bool,

    /// Grey erosion (neighborhood minimum).
    #[arg(long)]
    pub erode: bool,

    /// Structuring element edge length (odd cube).
    #[arg(long, default_value_t = 3)]
    pub se_size: usize,

    /// Crop to X,Y,Z voxels at a seeded offset.
    #[arg(long, value_name = "X,Y,Z")]
    pub crop: Option<String>,

    /// Random rotation bound in degrees (axis and angle are seeded).
    #[arg(long, value_name = "DEG")]
    pub rotate_max: Option<f64>,

    /// Output scalar kind (u8|i16|i32|f32|f64); defaults to the input's.
    #[arg(long)]
    pub kind: Option<String>,
}

fn parse_crop(text: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        bail!("--crop expects X,Y,Z (got {text:?})");
    }
    let mut dims = [0usize; 3];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("bad crop dimension {part:?}"))?;
    }
    Ok((dims[0], dims[1], dims[2]))
}

pub fn run(args: AugmentArgs, globals: &Globals) -> Result<()> {
    let out = globals.required_out("augment")?.clone();
    if !(args.dilate || args.erode || args.crop.is_some() || args.rotate_max.is_some()) {
        bail!("pass at least one of --dilate, --erode, --crop, --rotate-max");
    }

    let mut volume = read_volume(&args.input)?;
    let input_kind = volume.scalar_kind();

    let mut manifest = RunManifest::new("augment", globals.timestamp);
    manifest.input("input", &args.input)?;
    manifest.parameter("seed", globals.seed);

    if args.dilate || args.erode {
        let se = StructuringElement::cube(args.se_size)?;
        manifest.parameter("se_size", args.se_size);
        if args.dilate {
            manifest.parameter("morphology", "dilate");
            volume = grey_dilate(&volume, &se);
        } else {
            manifest.parameter("morphology", "erode");
            volume = grey_erode(&volume, &se);
        }
    }
    if let Some(crop) = &args.crop {
        let dims = parse_crop(crop)?;
        manifest.parameter("crop", crop.clone());
        volume = random_crop(&volume, dims, globals.seed)?;
    }
    if let Some(max_angle) = args.rotate_max {
        manifest.parameter("rotate_max", max_angle);
        volume = random_rotate(&volume, max_angle, globals.seed)?;
    }

    let kind = match &args.kind {
        Some(text) => text.parse::<ScalarKind>()?,
        None => input_kind,
    };
    manifest.parameter("scalar_kind", kind.to_string());
    write_volume(&volume, &out, kind)?;
    write_sidecar(&manifest, &out)?;
    Ok(())
}
