//! Quantitative disease-focus analysis for 3D brain volumes.
//!
//! The toolkit measures how much a scoring model attends to pathologically
//! relevant brain regions. The pipeline has two steps:
//!
//! 1. compute a gradient saliency map |∂score/∂input| per subject and
//!    min-max normalize it ([`saliency`]);
//! 2. aggregate the normalized map per segmented region via the median
//!    gradient intensity, rank the top regions, and score them against a
//!    C1/C2/C3 pathology category table — the mean category score is the
//!    disease-focus (DF) score in [0, 2] ([`region`]).
//!
//! Around that core: NIfTI-1 volume I/O ([`nifti`], [`volume`], [`tables`]),
//! small analytically-verifiable scoring models ([`model`]), a binary
//! classification metric suite ([`metrics`]), mutual-information feature
//! ranking for volumetric features ([`mutinfo`]), augmentation transforms
//! ([`transforms`]), and synthetic phantoms with known ground truth
//! ([`phantom`]).

pub mod error;
pub mod metrics;
pub mod model;
pub mod mutinfo;
pub mod nifti;
pub mod phantom;
pub mod region;
pub mod saliency;
pub mod tables;
pub mod transforms;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{check_same_grid, Grid, LabelMap, ScalarKind, Volume3D};
