//! Gradient saliency maps and their min-max normalization.
//!
//! A saliency map is the voxel-wise magnitude of the gradient of a model's
//! scalar score with respect to the input image. Each map is min-max
//! normalized independently so that maps are comparable across subjects and
//! models. Maps computed by other toolchains can be imported as NIfTI
//! gradient volumes; importers should note that in-process gradients are
//! taken of the raw pre-activation score, not a softmax output.

use std::path::Path;

use crate::error::Result;
use crate::model::ScoreModel;
use crate::nifti;
use crate::volume::{ScalarKind, Volume3D};

/// Voxel-wise gradient magnitude map, optionally min-max normalized.
#[derive(Debug, Clone)]
pub struct SaliencyMap {
    volume: Volume3D,
    /// True once values live on the normalized [0, 1] scale.
    normalized: bool,
    /// Provenance: model id or imported file path.
    source: String,
    /// Set when normalization met a constant map (all values forced to 0).
    constant: bool,
}

impl SaliencyMap {
    /// Wrap a gradient volume; applies |·| unless the values are already
    /// absolute.
    pub fn from_gradient(
        volume: Volume3D,
        source: impl Into<String>,
        already_absolute: bool,
    ) -> Self {
        let volume = if already_absolute {
            volume
        } else {
            volume.map(f64::abs)
        };
        SaliencyMap {
            volume,
            normalized: false,
            source: source.into(),
            constant: false,
        }
    }

    /// Wrap values that are already on the normalized [0, 1] scale
    /// (e.g. synthetic maps with configured levels). Rejects values outside
    /// [0, 1].
    pub fn pre_normalized(volume: Volume3D, source: impl Into<String>) -> Result<Self> {
        if !volume.data().iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(crate::error::Error::InvalidParameter(
                "pre-normalized saliency values must lie in [0, 1]".to_string(),
            ));
        }
        Ok(SaliencyMap {
            volume,
            normalized: true,
            source: source.into(),
            constant: false,
        })
    }

    pub fn volume(&self) -> &Volume3D {
        &self.volume
    }

    pub fn values(&self) -> &[f64] {
        self.volume.data()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when normalization degenerated on a constant map.
    pub fn is_constant(&self) -> bool {
        self.constant
    }
}

/// Compute the unnormalized saliency map |∂score/∂x| for a model and input.
pub fn compute_saliency(model: &dyn ScoreModel, x: &Volume3D) -> Result<SaliencyMap> {
    let gradient = model.input_gradient(x)?;
    Ok(SaliencyMap::from_gradient(gradient, model.id(), false))
}

/// Min-max normalize a saliency map: v' = (v − min) / (max − min).
///
/// Constant maps (max == min) normalize to all zeros and are flagged via
/// [`SaliencyMap::is_constant`]; such a map contributes nothing to region
/// rankings. Idempotent on already-normalized non-constant maps.
pub fn min_max_normalize(s: SaliencyMap) -> SaliencyMap {
    let (lo, hi) = s.volume.min_max();
    if hi == lo {
        return SaliencyMap {
            volume: s.volume.map(|_| 0.0),
            normalized: true,
            source: s.source,
            constant: true,
        };
    }
    let range = hi - lo;
    SaliencyMap {
        volume: s.volume.map(|v| (v - lo) / range),
        normalized: true,
        source: s.source,
        constant: false,
    }
}

/// Load a gradient or saliency volume from disk.
///
/// `already_absolute` skips the |·| for volumes that are known to hold
/// magnitudes already. The result is unnormalized.
pub fn import_saliency(path: impl AsRef<Path>, already_absolute: bool) -> Result<SaliencyMap> {
    let path = path.as_ref();
    let volume = nifti::read_volume(path)?;
    Ok(SaliencyMap::from_gradient(
        volume,
        path.display().to_string(),
        already_absolute,
    ))
}

/// Write a saliency map as a float64 NIfTI volume.
pub fn export_saliency(s: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    nifti::write_volume(s.volume(), path, ScalarKind::F64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearScorer;

    #[test]
    fn saliency_is_absolute_gradient() {
        let mut w = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        w.set(0, 0, 0, -2.0);
        w.set(1, 0, 0, 3.0);
        let model = LinearScorer::new(w, 0.0).unwrap();
        let x = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 5.0);
        let s = compute_saliency(&model, &x).unwrap();
        assert!(!s.is_normalized());
        assert_eq!(s.values()[0], 2.0);
        assert_eq!(s.values()[1], 3.0);
        assert!(s.values().iter().all(|&v| v >= 0.0));
        assert_eq!(s.source(), "linear");
    }

    #[test]
    fn linear_saliency_is_input_independent() {
        let mut w = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 1.0);
        w.set(1, 1, 1, -4.0);
        let model = LinearScorer::new(w, 0.0).unwrap();
        let a = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 0.0);
        let b = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 123.0);
        let sa = compute_saliency(&model, &a).unwrap();
        let sb = compute_saliency(&model, &b).unwrap();
        assert_eq!(sa.values(), sb.values());
    }

    #[test]
    fn normalize_spans_zero_to_one() {
        let v = Volume3D::new((3, 1, 1), (1.0, 1.0, 1.0), vec![0.0, 5.0, 10.0]).unwrap();
        let s = min_max_normalize(SaliencyMap::from_gradient(v, "t", true));
        assert_eq!(s.values(), &[0.0, 0.5, 1.0]);
        assert!(s.is_normalized());
        assert!(!s.is_constant());
    }

    #[test]
    fn constant_map_normalizes_to_zero_with_flag() {
        let v = Volume3D::constant((2, 2, 2), (1.0, 1.0, 1.0), 7.0);
        let s = min_max_normalize(SaliencyMap::from_gradient(v, "t", true));
        assert!(s.values().iter().all(|&x| x == 0.0));
        assert!(s.is_constant());
    }

    #[test]
    fn normalize_is_idempotent() {
        let v = Volume3D::new((4, 1, 1), (1.0, 1.0, 1.0), vec![0.25, 0.5, 0.125, 0.875]).unwrap();
        let once = min_max_normalize(SaliencyMap::from_gradient(v, "t", true));
        let twice = min_max_normalize(once.clone());
        assert_eq!(once.values(), twice.values());
    }
}
