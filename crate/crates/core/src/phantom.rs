//! Synthetic phantom volumes with known geometry and intensities.
//!
//! Phantoms stand in for clinical scans in tests and demos: every region's
//! voxel set, intensity, and expected median is known by construction, so
//! each pipeline stage has an oracle. Generation is deterministic per seed
//! (ChaCha8 stream, voxels visited in x-fastest order).
//!
//! [`standard_regions_spec`] builds a fixed phantom with one schematic geometry
//! per region of the standard C1/C2 vocabulary plus a set of larger
//! C3 structures. The geometries are boxes and spheres laid out on a grid —
//! NOT anatomy; they exist so end-to-end disease-focus runs can exercise the
//! real region names.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;
use crate::volume::{LabelMap, Volume3D};

/// Region shape in voxel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Geometry {
    /// Axis-aligned box: `corner` inclusive, spanning `size` voxels per axis.
    Box {
        corner: [usize; 3],
        size: [usize; 3],
    },
    /// Ball of voxels within `radius` of `center` (voxel units).
    Sphere { center: [f64; 3], radius: f64 },
}

impl Geometry {
    fn check_bounds(&self, dims: (usize, usize, usize), region: &str) -> Result<()> {
        let dims = [dims.0, dims.1, dims.2];
        match self {
            Geometry::Box { corner, size } => {
                for axis in 0..3 {
                    if size[axis] == 0 || corner[axis] + size[axis] > dims[axis] {
                        return Err(Error::OutOfBoundsGeometry {
                            region: region.to_string(),
                            detail: format!("box corner {corner:?} size {size:?} vs dims {dims:?}"),
                        });
                    }
                }
            }
            Geometry::Sphere { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::OutOfBoundsGeometry {
                        region: region.to_string(),
                        detail: format!("bad radius {radius}"),
                    });
                }
                for axis in 0..3 {
                    if center[axis] - radius < 0.0
                        || center[axis] + radius > dims[axis] as f64 - 1.0
                    {
                        return Err(Error::OutOfBoundsGeometry {
                            region: region.to_string(),
                            detail: format!(
                                "sphere center {center:?} radius {radius} vs dims {dims:?}"
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        match self {
            Geometry::Box { corner, size } => {
                x >= corner[0]
                    && x < corner[0] + size[0]
                    && y >= corner[1]
                    && y < corner[1] + size[1]
                    && z >= corner[2]
                    && z < corner[2] + size[2]
            }
            Geometry::Sphere { center, radius } => {
                let dx = x as f64 - center[0];
                let dy = y as f64 - center[1];
                let dz = z as f64 - center[2];
                dx * dx + dy * dy + dz * dz <= radius * radius
            }
        }
    }
}

/// One labeled region of a phantom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGeometry {
    pub id: u32,
    pub name: String,
    pub geometry: Geometry,
    pub base_intensity: f64,
}

/// Full phantom description (JSON-serializable; see the repo docs for the
/// schema). Overlapping geometries resolve later-wins in listing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    #[serde(default = "default_spacing")]
    pub spacing: [f64; 3],
    #[serde(default)]
    pub background_intensity: f64,
    /// Standard deviation of the Gaussian noise added to every image voxel.
    pub noise_sigma: f64,
    pub seed: u64,
    pub regions: Vec<RegionGeometry>,
}

fn default_spacing() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

/// Render a phantom: co-registered image and label map on one grid.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(Volume3D, LabelMap)> {
    let dims = (spec.dims[0], spec.dims[1], spec.dims[2]);
    let spacing = (spec.spacing[0], spec.spacing[1], spec.spacing[2]);
    if !(spec.noise_sigma.is_finite() && spec.noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {}",
            spec.noise_sigma
        )));
    }

    let mut ids = BTreeSet::new();
    let mut names = BTreeSet::new();
    for region in &spec.regions {
        if region.id == 0 {
            return Err(Error::InvalidParameter(format!(
                "region {:?} may not use the background id 0",
                region.name
            )));
        }
        if !ids.insert(region.id) {
            return Err(Error::DuplicateRegion(format!("region id {}", region.id)));
        }
        if !names.insert(region.name.clone()) {
            return Err(Error::DuplicateRegion(region.name.clone()));
        }
        region.geometry.check_bounds(dims, &region.name)?;
    }

    let mut image = Volume3D::constant(dims, spacing, spec.background_intensity);
    let mut labels = Volume3D::constant(dims, spacing, 0.0);
    // Later regions overwrite earlier ones where they overlap.
    for region in &spec.regions {
        for z in 0..dims.2 {
            for y in 0..dims.1 {
                for x in 0..dims.0 {
                    if region.geometry.contains(x, y, z) {
                        image.set(x, y, z, region.base_intensity);
                        labels.set(x, y, z, region.id as f64);
                    }
                }
            }
        }
    }

    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for v in image.data_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    let table: Vec<(u32, String)> = spec
        .regions
        .iter()
        .map(|r| (r.id, r.name.clone()))
        .collect();
    let label_map = LabelMap::new(labels, table)?;
    Ok((image, label_map))
}

/// Synthesize a saliency map with known per-region medians: focus regions
/// sit at `focus_level` ± jitter, everything else (background included) at
/// `background_level` ± jitter, clamped to [0, 1].
///
/// Requires `0 <= background_level < focus_level <= 1`. With
/// `jitter < (focus_level - background_level) / 2` the region medians stay
/// strictly ordered; with jitter 0 they equal the configured levels exactly.
pub fn make_focused_saliency(
    labels: &LabelMap,
    focus_regions: &BTreeSet<String>,
    focus_level: f64,
    background_level: f64,
    jitter: f64,
    seed: u64,
) -> Result<SaliencyMap> {
    if !(background_level >= 0.0 && background_level < focus_level && focus_level <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "levels must satisfy 0 <= background < focus <= 1, got {background_level} and {focus_level}"
        )));
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "jitter must be >= 0, got {jitter}"
        )));
    }
    let mut focus_ids = BTreeSet::new();
    for name in focus_regions {
        match labels.region_id(name) {
            Some(id) => {
                focus_ids.insert(id);
            }
            None => return Err(Error::UnknownRegion(name.clone())),
        }
    }

    let grid = labels.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let id = labels.label_at(i);
        let level = if id != 0 && focus_ids.contains(&id) {
            focus_level
        } else {
            background_level
        };
        let value = if jitter > 0.0 {
            (level + rng.random_range(-jitter..=jitter)).clamp(0.0, 1.0)
        } else {
            level
        };
        data.push(value);
    }
    let volume = Volume3D::new(grid.dims(), grid.spacing(), data)?;
    SaliencyMap::pre_normalized(volume, "phantom-focused")
}

/// The fixed standard-regions phantom: one schematic geometry per region of
/// the default C1/C2 vocabulary, plus twelve larger C3 structures.
///
/// Every C3 structure holds more voxels than any C1/C2 region, mirroring the
/// size disparity between bulk anatomy and the small medial-temporal
/// structures.
pub fn standard_regions_spec() -> PhantomSpec {
    // (name, box edge length; 0 marks the two sphere regions)
    const REGIONS: &[(&str, usize)] = &[
        // C1
        ("ctx-rh-entorhinal", 4),
        ("ctx-lh-entorhinal", 4),
        ("Left-Inf-Lat-Vent", 5),
        ("Right-Inf-Lat-Vent", 5),
        ("Left-Amygdala", 4),
        ("Right-Amygdala", 4),
        ("Left-Hippocampus", 5),
        ("Right-Hippocampus", 5),
        ("Left-Lateral-Ventricle", 0), // sphere r = 2.5
        ("ctx-lh-middletemporal", 5),
        ("ctx-lh-parahippocampal", 4),
        ("ctx-lh-inferiortemporal", 5),
        // C2
        ("Left-Pallidum", 4),
        ("ctx-lh-parsopercularis", 4),
        ("ctx-lh-supramarginal", 5),
        ("ctx-lh-precentral", 5),
        // C3 bulk structures (all larger than any region above)
        ("Left-Cerebral-White-Matter", 8),
        ("Right-Cerebral-White-Matter", 8),
        ("Left-Cerebellum-Cortex", 8),
        ("Right-Cerebellum-Cortex", 8),
        ("Left-Thalamus", 7),
        ("Right-Thalamus", 7),
        ("Left-Caudate", 7),
        ("Right-Caudate", 7),
        ("Left-Putamen", 7),
        ("Right-Putamen", 7),
        ("Brain-Stem", 8),
        ("CSF", 0), // sphere r = 3.5
    ];

    const CELL: usize = 12;
    let mut regions = Vec::with_capacity(REGIONS.len());
    for (idx, &(name, edge)) in REGIONS.iter().enumerate() {
        // 4×4 cells per slab, one region per cell.
        let cell = (idx % 4, (idx / 4) % 4, idx / 16);
        let origin = [cell.0 * CELL, cell.1 * CELL, cell.2 * CELL];
        let geometry = if edge == 0 {
            let radius = if name == "CSF" { 3.5 } else { 2.5 };
            Geometry::Sphere {
                center: [
                    (origin[0] + CELL / 2) as f64,
                    (origin[1] + CELL / 2) as f64,
                    (origin[2] + CELL / 2) as f64,
                ],
                radius,
            }
        } else {
            let pad = (CELL - edge) / 2;
            Geometry::Box {
                corner: [origin[0] + pad, origin[1] + pad, origin[2] + pad],
                size: [edge, edge, edge],
            }
        };
        regions.push(RegionGeometry {
            id: (idx + 1) as u32,
            name: name.to_string(),
            geometry,
            base_intensity: 0.3 + 0.02 * idx as f64,
        });
    }

    PhantomSpec {
        dims: [48, 48, 48],
        spacing: [1.0, 1.0, 1.0],
        background_intensity: 0.0,
        noise_sigma: 0.01,
        seed: 7,
        regions,
    }
}

/// C1 region names of the standard-regions phantom.
pub fn standard_regions_c1() -> BTreeSet<String> {
    [
        "ctx-rh-entorhinal",
        "ctx-lh-entorhinal",
        "Left-Inf-Lat-Vent",
        "Right-Inf-Lat-Vent",
        "Left-Amygdala",
        "Right-Amygdala",
        "Left-Hippocampus",
        "Right-Hippocampus",
        "Left-Lateral-Ventricle",
        "ctx-lh-middletemporal",
        "ctx-lh-parahippocampal",
        "ctx-lh-inferiortemporal",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}
