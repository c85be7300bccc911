//! Mound counting from UAV orthomosaics, in two stages.
//!
//! Stage one consumes instance-segmentation output (polygon annotation
//! files) and summarizes each fixed-size patch as a feature vector: the
//! visible mound count plus area ratios of trees, water, and woody debris.
//! Stage two corrects the visible count with a regression model (linear,
//! SVR, lasso, or MLP) trained against ground truth, and block totals are
//! aggregated and scored with the relative counting precision metric.
//!
//! The crate is organized along the pipeline:
//!
//! - [`raster`] — image handling and the non-overlapping patch grid.
//! - [`annotations`] — polygon annotation parsing, clipping, rasterization.
//! - [`features`] — per-patch feature vectors and dataset assembly.
//! - [`detect`] — a blob-detector stand-in for the segmentation stage and a
//!   stochastic detection degrader for controlled experiments.
//! - [`regress`] — the four correction models with standardization,
//!   selection, and serialization.
//! - [`evaluate`] — block aggregation, the RCP metric, report rendering.
//! - [`synth`] — synthetic planting-block generation with known statistics.

pub mod annotations;
pub mod detect;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod geometry;
pub mod raster;
pub mod regress;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
