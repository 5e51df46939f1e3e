//! Dense 3D scalar volumes, segmentation label maps, and grid compatibility.
//!
//! A [`Volume3D`] stores its payload as `f64` in x-fastest order regardless of
//! the scalar kind it was loaded from; all numeric work in the toolkit happens
//! in `f64`. A [`LabelMap`] pairs an integer-valued volume with a table naming
//! each region id, following the FastSurfer/FreeSurfer naming convention
//! (e.g. `ctx-lh-entorhinal`, `Left-Inf-Lat-Vent`). Label id 0 is reserved
//! for background.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative tolerance used when comparing voxel spacings of two grids.
pub const SPACING_REL_TOL: f64 = 1e-6;

/// On-disk scalar representation of a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarKind {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl ScalarKind {
    /// NIfTI-1 datatype code.
    pub fn code(self) -> i16 {
        match self {
            ScalarKind::U8 => 2,
            ScalarKind::I16 => 4,
            ScalarKind::I32 => 8,
            ScalarKind::F32 => 16,
            ScalarKind::F64 => 64,
        }
    }

    pub fn from_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(ScalarKind::U8),
            4 => Ok(ScalarKind::I16),
            8 => Ok(ScalarKind::I32),
            16 => Ok(ScalarKind::F32),
            64 => Ok(ScalarKind::F64),
            other => Err(Error::UnsupportedDatatype(other)),
        }
    }

    /// Bytes per stored element.
    pub fn byte_size(self) -> usize {
        match self {
            ScalarKind::U8 => 1,
            ScalarKind::I16 => 2,
            ScalarKind::I32 | ScalarKind::F32 => 4,
            ScalarKind::F64 => 8,
        }
    }

    /// Whether this kind stores integers (and therefore has a bounded range).
    pub fn is_integer(self) -> bool {
        matches!(self, ScalarKind::U8 | ScalarKind::I16 | ScalarKind::I32)
    }

    /// Inclusive representable range for integer kinds; `None` for floats.
    pub fn integer_range(self) -> Option<(f64, f64)> {
        match self {
            ScalarKind::U8 => Some((0.0, u8::MAX as f64)),
            ScalarKind::I16 => Some((i16::MIN as f64, i16::MAX as f64)),
            ScalarKind::I32 => Some((i32::MIN as f64, i32::MAX as f64)),
            ScalarKind::F32 | ScalarKind::F64 => None,
        }
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ScalarKind::U8 => "u8",
            ScalarKind::I16 => "i16",
            ScalarKind::I32 => "i32",
            ScalarKind::F32 => "f32",
            ScalarKind::F64 => "f64",
        };
        write!(f, "{name}")
    }
}

impl FromStr for ScalarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u8" | "uint8" => Ok(ScalarKind::U8),
            "i16" | "int16" => Ok(ScalarKind::I16),
            "i32" | "int32" => Ok(ScalarKind::I32),
            "f32" | "float32" => Ok(ScalarKind::F32),
            "f64" | "float64" => Ok(ScalarKind::F64),
            other => Err(Error::InvalidParameter(format!(
                "unknown scalar kind {other:?} (expected u8, i16, i32, f32 or f64)"
            ))),
        }
    }
}

/// Voxel grid: dimension counts plus physical spacing in millimeters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dims: (usize, usize, usize),
    pub spacing: (f64, f64, f64),
}

impl Grid {
    pub fn new(dims: (usize, usize, usize), spacing: (f64, f64, f64)) -> Result<Self> {
        if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
            return Err(Error::InvalidVolume(format!(
                "dims must be positive, got {dims:?}"
            )));
        }
        for s in [spacing.0, spacing.1, spacing.2] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidVolume(format!(
                    "spacing must be strictly positive and finite, got {spacing:?}"
                )));
            }
        }
        Ok(Grid { dims, spacing })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Same dims, spacing equal within [`SPACING_REL_TOL`] relative tolerance.
    pub fn compatible(&self, other: &Grid) -> bool {
        fn close(a: f64, b: f64) -> bool {
            (a - b).abs() <= SPACING_REL_TOL * a.abs().max(b.abs())
        }
        self.dims == other.dims
            && close(self.spacing.0, other.spacing.0)
            && close(self.spacing.1, other.spacing.1)
            && close(self.spacing.2, other.spacing.2)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}) @ ({}, {}, {}) mm",
            self.dims.0, self.dims.1, self.dims.2, self.spacing.0, self.spacing.1, self.spacing.2
        )
    }
}

/// Dense 3D scalar grid in x-fastest order: `index = x + nx * (y + ny * z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    grid: Grid,
    scalar_kind: ScalarKind,
    data: Vec<f64>,
}

impl Volume3D {
    /// Build a volume, validating payload length and spacing.
    pub fn new(
        dims: (usize, usize, usize),
        spacing: (f64, f64, f64),
        data: Vec<f64>,
    ) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        Self::from_grid(grid, data)
    }

    pub fn from_grid(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.voxel_count() {
            return Err(Error::InvalidVolume(format!(
                "payload length {} does not match dims {:?} ({} voxels)",
                data.len(),
                grid.dims,
                grid.voxel_count()
            )));
        }
        Ok(Volume3D {
            grid,
            scalar_kind: ScalarKind::F64,
            data,
        })
    }

    /// Constant-valued volume.
    pub fn constant(dims: (usize, usize, usize), spacing: (f64, f64, f64), value: f64) -> Self {
        let grid = Grid::new(dims, spacing).expect("constant volume grid");
        let n = grid.voxel_count();
        Volume3D {
            grid,
            scalar_kind: ScalarKind::F64,
            data: vec![value; n],
        }
    }

    pub fn with_scalar_kind(mut self, kind: ScalarKind) -> Self {
        self.scalar_kind = kind;
        self
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.grid.dims
    }

    pub fn spacing(&self) -> (f64, f64, f64) {
        self.grid.spacing
    }

    /// Scalar kind the volume was loaded from (f64 for in-memory constructions).
    pub fn scalar_kind(&self) -> ScalarKind {
        self.scalar_kind
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Linear index of voxel (x, y, z).
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let (nx, ny, _) = self.grid.dims;
        x + nx * (y + ny * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, value: f64) {
        let i = self.index(x, y, z);
        self.data[i] = value;
    }

    /// New volume on the same grid with `op` applied voxel-wise.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> Volume3D {
        Volume3D {
            grid: self.grid,
            scalar_kind: ScalarKind::F64,
            data: self.data.iter().map(|&v| op(v)).collect(),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Error out if any voxel is NaN or infinite.
    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteData(what.to_string()))
        }
    }
}

/// Succeeds iff both volumes live on compatible grids.
pub fn check_same_grid(a: &Volume3D, b: &Volume3D) -> Result<()> {
    if a.grid().compatible(&b.grid()) {
        Ok(())
    } else {
        Err(Error::GridMismatch {
            left: a.grid(),
            right: b.grid(),
        })
    }
}

/// Integer-valued volume assigning each voxel a region id, plus the id→name table.
#[derive(Debug, Clone)]
pub struct LabelMap {
    grid: Volume3D,
    regions: BTreeMap<u32, String>,
}

impl LabelMap {
    /// Validate and assemble a label map.
    ///
    /// Every voxel must hold a nonnegative integer; every nonzero value must
    /// appear in the region table; region names must be unique; id 0 is
    /// reserved for background and may not be named.
    pub fn new(grid: Volume3D, regions: impl IntoIterator<Item = (u32, String)>) -> Result<Self> {
        let mut table = BTreeMap::new();
        let mut names = BTreeSet::new();
        for (id, name) in regions {
            if id == 0 {
                return Err(Error::InvalidVolume(
                    "region id 0 is reserved for background".to_string(),
                ));
            }
            if !names.insert(name.clone()) {
                return Err(Error::DuplicateRegion(name));
            }
            if table.insert(id, name).is_some() {
                return Err(Error::DuplicateRegion(format!("region id {id}")));
            }
        }

        for &v in grid.data() {
            if !(v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
                return Err(Error::InvalidVolume(format!(
                    "label map voxel value {v} is not a nonnegative integer"
                )));
            }
            let id = v as u32;
            if id != 0 && !table.contains_key(&id) {
                return Err(Error::InvalidVolume(format!(
                    "voxel label {id} missing from region table"
                )));
            }
        }

        Ok(LabelMap {
            grid,
            regions: table,
        })
    }

    pub fn grid(&self) -> &Volume3D {
        &self.grid
    }

    /// Region table sorted by id.
    pub fn regions(&self) -> impl Iterator<Item = (u32, &str)> {
        self.regions.iter().map(|(id, name)| (*id, name.as_str()))
    }

    pub fn region_name(&self, id: u32) -> Option<&str> {
        self.regions.get(&id).map(String::as_str)
    }

    pub fn region_id(&self, name: &str) -> Option<u32> {
        self.regions
            .iter()
            .find(|(_, n)| n.as_str() == name)
            .map(|(id, _)| *id)
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    /// Label id at voxel index `i`.
    #[inline]
    pub fn label_at(&self, i: usize) -> u32 {
        self.grid.data()[i] as u32
    }

    /// Distinct nonzero labels actually present in the voxel data.
    pub fn distinct_labels(&self) -> BTreeSet<u32> {
        self.grid
            .data()
            .iter()
            .map(|&v| v as u32)
            .filter(|&id| id != 0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_rejects_wrong_payload_length() {
        let err = Volume3D::new((2, 2, 2), (1.0, 1.0, 1.0), vec![0.0; 7]).unwrap_err();
        assert!(matches!(err, Error::InvalidVolume(_)));
    }

    #[test]
    fn volume_rejects_nonpositive_spacing() {
        let err = Volume3D::new((2, 2, 2), (1.0, 0.0, 1.0), vec![0.0; 8]).unwrap_err();
        assert!(matches!(err, Error::InvalidVolume(_)));
    }

    #[test]
    fn index_is_x_fastest() {
        let mut v = Volume3D::constant((3, 4, 5), (1.0, 1.0, 1.0), 0.0);
        v.set(1, 2, 3, 9.0);
        assert_eq!(v.data()[1 + 3 * (2 + 4 * 3)], 9.0);
        assert_eq!(v.get(1, 2, 3), 9.0);
    }

    #[test]
    fn grid_compatibility_tolerates_tiny_spacing_noise() {
        let a = Volume3D::constant((8, 8, 8), (1.0, 1.0, 1.0), 0.0);
        let b = Volume3D::constant((8, 8, 8), (1.0, 1.0, 1.0 + 1e-9), 0.0);
        assert!(check_same_grid(&a, &b).is_ok());
    }

    #[test]
    fn grid_mismatch_reports_both_shapes() {
        let a = Volume3D::constant((8, 8, 8), (1.0, 1.0, 1.0), 0.0);
        let b = Volume3D::constant((8, 8, 9), (1.0, 1.0, 1.0), 0.0);
        let err = check_same_grid(&a, &b).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("(8, 8, 8)") && msg.contains("(8, 8, 9)"),
            "{msg}"
        );
    }

    #[test]
    fn label_map_requires_table_closure() {
        let mut grid = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        grid.set(0, 0, 0, 3.0);
        let err = LabelMap::new(grid.clone(), vec![(1, "A".to_string())]).unwrap_err();
        assert!(matches!(err, Error::InvalidVolume(_)));

        let ok = LabelMap::new(grid, vec![(3, "A".to_string())]).unwrap();
        assert_eq!(ok.region_name(3), Some("A"));
        assert_eq!(ok.distinct_labels().len(), 1);
    }

    #[test]
    fn label_map_rejects_duplicate_names_and_background_id() {
        let grid = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        let err = LabelMap::new(
            grid.clone(),
            vec![(1, "A".to_string()), (2, "A".to_string())],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateRegion(_)));

        let err = LabelMap::new(grid, vec![(0, "bg".to_string())]).unwrap_err();
        assert!(matches!(err, Error::InvalidVolume(_)));
    }

    #[test]
    fn label_map_rejects_fractional_voxels() {
        let mut grid = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        grid.set(0, 0, 0, 1.5);
        let err = LabelMap::new(grid, vec![(1, "A".to_string())]).unwrap_err();
        assert!(matches!(err, Error::InvalidVolume(_)));
    }
}
