//! Object/background image segmentation by per-pixel classification of
//! context windows.
//!
//! Every pixel is described by the flattened, normalized intensities of the
//! odd-sized window around it. A small tansig feedforward network (default
//! 81-18-10-2 for a 9x9 gray window) trained with full-batch
//! Levenberg-Marquardt classifies each window as object or background; a
//! 1-nearest-neighbor classifier over the same features and an unsupervised
//! Gabor-filter-bank pipeline serve as baselines.
//!
//! The pipeline stages are independent and scriptable through the `cwseg`
//! binary: `gray` (RGB to gray), `sample` (stratified pixel selection into
//! a 70/30 dataset), `train` (Levenberg-Marquardt), `segment` (whole-image
//! masks) and `eval` (classification-efficiency reports).

pub mod cli;
pub mod context;
pub mod error;
pub mod eval;
pub mod gabor;
pub mod image;
pub mod mlp;
pub mod nn;
pub mod sampler;

pub use error::{Error, Result};
pub use image::{GroundTruthMask, Label, RasterImage};
