//! Volume augmentation transforms: grey dilation, grey erosion, random crop
//! and random rotation.
//!
//! Morphology uses replicate-edge padding so flat borders stay flat;
//! rotation resamples nearest-neighbor with zero fill, which keeps label
//! maps valid under the same transform. The random transforms are pure
//! functions of (input, parameters, seed); randomness comes from a ChaCha8
//! stream keyed by the seed, so outputs are identical across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::volume::Volume3D;

/// Cubic neighborhood mask for grey morphology; `k` odd, center always set.
#[derive(Debug, Clone)]
pub struct StructuringElement {
    size: usize,
    mask: Vec<bool>,
}

impl StructuringElement {
    pub fn new(size: usize, mask: Vec<bool>) -> Result<Self> {
        if size.is_multiple_of(2) || size == 0 {
            return Err(Error::InvalidParameter(format!(
                "structuring element size must be odd and positive, got {size}"
            )));
        }
        if mask.len() != size.pow(3) {
            return Err(Error::InvalidParameter(format!(
                "mask holds {} entries, expected {}",
                mask.len(),
                size.pow(3)
            )));
        }
        let center = size / 2;
        if !mask[center + size * (center + size * center)] {
            return Err(Error::InvalidParameter(
                "structuring element must include its center".to_string(),
            ));
        }
        Ok(StructuringElement { size, mask })
    }

    /// Full k×k×k cube (default shape, k = 3).
    pub fn cube(size: usize) -> Result<Self> {
        Self::new(size, vec![true; size.pow(3)])
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Offsets of set mask positions relative to the center.
    fn offsets(&self) -> Vec<(isize, isize, isize)> {
        let k = self.size as isize;
        let c = k / 2;
        let mut out = Vec::new();
        for kz in 0..k {
            for ky in 0..k {
                for kx in 0..k {
                    if self.mask[(kx + k * (ky + k * kz)) as usize] {
                        out.push((kx - c, ky - c, kz - c));
                    }
                }
            }
        }
        out
    }
}

impl Default for StructuringElement {
    fn default() -> Self {
        Self::cube(3).expect("3x3x3 cube is valid")
    }
}

#[inline]
fn clamp(v: isize, hi: usize) -> usize {
    v.clamp(0, hi as isize - 1) as usize
}

fn morph(v: &Volume3D, se: &StructuringElement, pick: impl Fn(f64, f64) -> f64) -> Volume3D {
    let (nx, ny, nz) = v.dims();
    let offsets = se.offsets();
    let mut out = Volume3D::constant(v.dims(), v.spacing(), 0.0);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut acc = v.get(x, y, z); // center is always in the mask
                for &(dx, dy, dz) in &offsets {
                    let sx = clamp(x as isize + dx, nx);
                    let sy = clamp(y as isize + dy, ny);
                    let sz = clamp(z as isize + dz, nz);
                    acc = pick(acc, v.get(sx, sy, sz));
                }
                out.set(x, y, z, acc);
            }
        }
    }
    out
}

/// Neighborhood maximum under the structuring element (replicate padding).
pub fn grey_dilate(v: &Volume3D, se: &StructuringElement) -> Volume3D {
    morph(v, se, f64::max)
}

/// Neighborhood minimum under the structuring element (replicate padding).
/// Dual of dilation: `grey_erode(v) == -grey_dilate(-v)` exactly.
pub fn grey_erode(v: &Volume3D, se: &StructuringElement) -> Volume3D {
    morph(v, se, f64::min)
}

/// Contiguous sub-volume at a seed-determined offset, uniform over all valid
/// offsets.
pub fn random_crop(v: &Volume3D, out_dims: (usize, usize, usize), seed: u64) -> Result<Volume3D> {
    let dims = v.dims();
    if out_dims.0 == 0 || out_dims.1 == 0 || out_dims.2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "crop dims must be positive, got {out_dims:?}"
        )));
    }
    if out_dims.0 > dims.0 || out_dims.1 > dims.1 || out_dims.2 > dims.2 {
        return Err(Error::CropTooLarge {
            requested: out_dims,
            available: dims,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ox = rng.random_range(0..=dims.0 - out_dims.0);
    let oy = rng.random_range(0..=dims.1 - out_dims.1);
    let oz = rng.random_range(0..=dims.2 - out_dims.2);

    let mut out = Volume3D::constant(out_dims, v.spacing(), 0.0);
    for z in 0..out_dims.2 {
        for y in 0..out_dims.1 {
            for x in 0..out_dims.0 {
                out.set(x, y, z, v.get(x + ox, y + oy, z + oz));
            }
        }
    }
    Ok(out)
}

/// Rotate about a seed-chosen axis by a seed-chosen angle in
/// [−max_angle, +max_angle] degrees, nearest-neighbor, about the volume
/// center, zero fill outside. Angles are applied in voxel space.
pub fn random_rotate(v: &Volume3D, max_angle_degrees: f64, seed: u64) -> Result<Volume3D> {
    if !(max_angle_degrees.is_finite() && max_angle_degrees >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max rotation angle must be >= 0, got {max_angle_degrees}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis: u8 = rng.random_range(0..3);
    let angle_degrees = if max_angle_degrees == 0.0 {
        0.0
    } else {
        rng.random_range(-max_angle_degrees..=max_angle_degrees)
    };
    Ok(rotate(v, axis, angle_degrees))
}

/// Rotation by a fixed angle about one axis (0 = x, 1 = y, 2 = z).
pub fn rotate(v: &Volume3D, axis: u8, angle_degrees: f64) -> Volume3D {
    let (nx, ny, nz) = v.dims();
    let theta = angle_degrees.to_radians();
    let (sin, cos) = theta.sin_cos();
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    let cz = (nz as f64 - 1.0) / 2.0;

    let mut out = Volume3D::constant(v.dims(), v.spacing(), 0.0);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let dz = z as f64 - cz;
                // Inverse rotation of the output coordinate.
                let (sx, sy, sz) = match axis {
                    0 => (dx, cos * dy + sin * dz, -sin * dy + cos * dz),
                    1 => (cos * dx - sin * dz, dy, sin * dx + cos * dz),
                    _ => (cos * dx + sin * dy, -sin * dx + cos * dy, dz),
                };
                let sx = (sx + cx).round();
                let sy = (sy + cy).round();
                let sz = (sz + cz).round();
                let inside = sx >= 0.0
                    && sy >= 0.0
                    && sz >= 0.0
                    && sx < nx as f64
                    && sy < ny as f64
                    && sz < nz as f64;
                if inside {
                    out.set(x, y, z, v.get(sx as usize, sy as usize, sz as usize));
                }
            }
        }
    }
    out
}
