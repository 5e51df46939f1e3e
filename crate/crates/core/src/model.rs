//! Differentiable scalar scoring models over volumes.
//!
//! A [`ScoreModel`] maps a volume to a scalar score and exposes the exact
//! gradient of that score with respect to every input voxel. The two
//! concrete models here are deliberately small enough to verify against
//! central finite differences ([`finite_difference_check`]); gradients from
//! full-size networks trained elsewhere enter the pipeline as NIfTI volumes
//! instead (see the saliency module).
//!
//! Convention: the score is a raw (pre-activation) scalar, and the rectifier
//! in [`TinyConvScorer`] uses subgradient 0 at exactly 0. Finite-difference
//! comparisons should therefore avoid inputs sitting on a rectifier kink.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{check_same_grid, Grid, Volume3D};

/// Scalar scoring model with exact input gradients.
pub trait ScoreModel {
    /// Identifier used for provenance in saliency maps and reports.
    fn id(&self) -> &str;

    /// Deterministic scalar score of the input.
    fn score(&self, x: &Volume3D) -> Result<f64>;

    /// Exact gradient of the score with respect to every voxel of `x`,
    /// on the same grid as `x`.
    fn input_gradient(&self, x: &Volume3D) -> Result<Volume3D>;
}

/// Affine model: score = Σ w·x + bias. Its gradient is the weight field,
/// independent of the input.
#[derive(Debug, Clone)]
pub struct LinearScorer {
    id: String,
    weights: Volume3D,
    bias: f64,
}

impl LinearScorer {
    pub fn new(weights: Volume3D, bias: f64) -> Result<Self> {
        weights.ensure_finite("linear weights")?;
        if !bias.is_finite() {
            return Err(Error::InvalidParameter("bias must be finite".to_string()));
        }
        Ok(LinearScorer {
            id: "linear".to_string(),
            weights,
            bias,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn weights(&self) -> &Volume3D {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Grid the model accepts.
    pub fn declared_grid(&self) -> Grid {
        self.weights.grid()
    }
}

impl ScoreModel for LinearScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, x: &Volume3D) -> Result<f64> {
        check_same_grid(&self.weights, x)?;
        let dot: f64 = self
            .weights
            .data()
            .iter()
            .zip(x.data())
            .map(|(w, v)| w * v)
            .sum();
        Ok(dot + self.bias)
    }

    fn input_gradient(&self, x: &Volume3D) -> Result<Volume3D> {
        check_same_grid(&self.weights, x)?;
        Ok(self.weights.clone())
    }
}

/// Small convolutional model: score = scale · mean(relu(conv3d_same(x, kernel))) + offset.
///
/// The convolution is a cross-correlation with zero padding, so the output
/// grid equals the input grid and the model accepts any grid.
#[derive(Debug, Clone)]
pub struct TinyConvScorer {
    id: String,
    kernel_size: usize,
    kernel: Vec<f64>,
    scale: f64,
    offset: f64,
}

impl TinyConvScorer {
    pub fn new(kernel_size: usize, kernel: Vec<f64>, scale: f64, offset: f64) -> Result<Self> {
        if kernel_size.is_multiple_of(2) || kernel_size == 0 {
            return Err(Error::InvalidParameter(format!(
                "kernel size must be odd and positive, got {kernel_size}"
            )));
        }
        if kernel.len() != kernel_size.pow(3) {
            return Err(Error::InvalidParameter(format!(
                "kernel holds {} values, expected {}",
                kernel.len(),
                kernel_size.pow(3)
            )));
        }
        if !kernel.iter().all(|v| v.is_finite()) || !scale.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidParameter(
                "kernel, scale and offset must be finite".to_string(),
            ));
        }
        Ok(TinyConvScorer {
            id: "tiny-conv".to_string(),
            kernel_size,
            kernel,
            scale,
            offset,
        })
    }

    /// 3×3×3 kernel with 1 at the center: the conv step is the identity.
    pub fn identity(scale: f64, offset: f64) -> Self {
        let mut kernel = vec![0.0; 27];
        kernel[13] = 1.0;
        Self::new(3, kernel, scale, offset).expect("identity kernel is valid")
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    #[inline]
    fn kernel_at(&self, kx: usize, ky: usize, kz: usize) -> f64 {
        let k = self.kernel_size;
        self.kernel[kx + k * (ky + k * kz)]
    }

    /// Cross-correlation with zero padding, same output grid.
    fn conv_same(&self, x: &Volume3D) -> Volume3D {
        let (nx, ny, nz) = x.dims();
        let k = self.kernel_size as isize;
        let c = k / 2;
        let mut out = Volume3D::constant(x.dims(), x.spacing(), 0.0);
        for z in 0..nz as isize {
            for y in 0..ny as isize {
                for x_i in 0..nx as isize {
                    let mut acc = 0.0;
                    for kz in 0..k {
                        let sz = z + kz - c;
                        if sz < 0 || sz >= nz as isize {
                            continue;
                        }
                        for ky in 0..k {
                            let sy = y + ky - c;
                            if sy < 0 || sy >= ny as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let sx = x_i + kx - c;
                                if sx < 0 || sx >= nx as isize {
                                    continue;
                                }
                                acc += self.kernel_at(kx as usize, ky as usize, kz as usize)
                                    * x.get(sx as usize, sy as usize, sz as usize);
                            }
                        }
                    }
                    out.set(x_i as usize, y as usize, z as usize, acc);
                }
            }
        }
        out
    }
}

impl ScoreModel for TinyConvScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, x: &Volume3D) -> Result<f64> {
        let pre = self.conv_same(x);
        let n = pre.len() as f64;
        let mean: f64 = pre.data().iter().map(|&v| v.max(0.0)).sum::<f64>() / n;
        Ok(self.scale * mean + self.offset)
    }

    fn input_gradient(&self, x: &Volume3D) -> Result<Volume3D> {
        let pre = self.conv_same(x);
        let (nx, ny, nz) = x.dims();
        let n = pre.len() as f64;
        let k = self.kernel_size as isize;
        let c = k / 2;
        let w = self.scale / n;

        // Reverse pass: each active pre-activation voxel scatters the kernel
        // back onto the input positions that fed it.
        let mut grad = Volume3D::constant(x.dims(), x.spacing(), 0.0);
        for z in 0..nz as isize {
            for y in 0..ny as isize {
                for x_i in 0..nx as isize {
                    if pre.get(x_i as usize, y as usize, z as usize) <= 0.0 {
                        continue; // rectifier subgradient 0 at and below the kink
                    }
                    for kz in 0..k {
                        let sz = z + kz - c;
                        if sz < 0 || sz >= nz as isize {
                            continue;
                        }
                        for ky in 0..k {
                            let sy = y + ky - c;
                            if sy < 0 || sy >= ny as isize {
                                continue;
                            }
                            for kx in 0..k {
                                let sx = x_i + kx - c;
                                if sx < 0 || sx >= nx as isize {
                                    continue;
                                }
                                let i = grad.index(sx as usize, sy as usize, sz as usize);
                                grad.data_mut()[i] +=
                                    w * self.kernel_at(kx as usize, ky as usize, kz as usize);
                            }
                        }
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// Max over voxels of |g_analytic − g_central| / max(1e-12, |g_central|),
/// with central differences of the given step.
pub fn finite_difference_check(model: &dyn ScoreModel, x: &Volume3D, step: f64) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be > 0, got {step}"
        )));
    }
    let analytic = model.input_gradient(x)?;
    let mut probe = x.clone();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let original = probe.data()[i];
        probe.data_mut()[i] = original + step;
        let plus = model.score(&probe)?;
        probe.data_mut()[i] = original - step;
        let minus = model.score(&probe)?;
        probe.data_mut()[i] = original;

        let central = (plus - minus) / (2.0 * step);
        let rel = (analytic.data()[i] - central).abs() / central.abs().max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// On-disk model description (JSON).
///
/// ```json
/// {"kind": "linear", "dims": [4,4,4], "spacing": [1,1,1],
///  "weights": [/* nx*ny*nz values, x fastest */], "bias": 0.0}
/// {"kind": "tiny-conv", "kernel_size": 3,
///  "kernel": [/* k^3 values, x fastest */], "scale": 1.0, "offset": 0.0}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelFile {
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        dims: [usize; 3],
        spacing: [f64; 3],
        weights: Vec<f64>,
        bias: f64,
    },
    TinyConv {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        kernel_size: usize,
        kernel: Vec<f64>,
        scale: f64,
        offset: f64,
    },
}

impl ModelFile {
    pub fn build(self) -> Result<Box<dyn ScoreModel>> {
        match self {
            ModelFile::Linear {
                id,
                dims,
                spacing,
                weights,
                bias,
            } => {
                let volume = Volume3D::new(
                    (dims[0], dims[1], dims[2]),
                    (spacing[0], spacing[1], spacing[2]),
                    weights,
                )?;
                let mut model = LinearScorer::new(volume, bias)?;
                if let Some(id) = id {
                    model = model.with_id(id);
                }
                Ok(Box::new(model))
            }
            ModelFile::TinyConv {
                id,
                kernel_size,
                kernel,
                scale,
                offset,
            } => {
                let mut model = TinyConvScorer::new(kernel_size, kernel, scale, offset)?;
                if let Some(id) = id {
                    model = model.with_id(id);
                }
                Ok(Box::new(model))
            }
        }
    }
}

/// Load a model from its JSON description.
pub fn load_model(path: impl AsRef<Path>) -> Result<Box<dyn ScoreModel>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::MalformedJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    file.build()
}
