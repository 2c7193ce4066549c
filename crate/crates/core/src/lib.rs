//! Heatmap codec for arbitrary-shape text regions.
//!
//! Polygons are reduced to center-line skeletons and encoded as unions of
//! 2D Gaussians; [`textfill::decode`] recovers polygons from a heatmap by
//! flooding from its peaks. [`eval`] scores detections against groundtruth.

pub mod datasets;
pub mod diag;
pub mod eval;
pub mod geometry;
pub mod heatmap;
pub mod raster;
pub mod textfill;

pub use datasets::{AnnotatedImage, Corpus};
pub use diag::Diagnostic;
pub use geometry::{Point2D, TextPolygon, TextSkeleton};
pub use heatmap::{render_groundtruth, EncodeConfig, Heatmap, LossConfig};
pub use raster::BinaryMask;
pub use textfill::{decode, Detection, TextfillConfig};
