//! Post-processing and visualisation of heatmaps.

mod blobs;
mod ellipse;
mod enhance;
pub mod palette;
mod render;
mod semantic;

pub use blobs::{detect_blobs, Blob, BlobConfig, BlobSet};
pub use ellipse::{gaussian_match, EllipseOverlay, DEFAULT_AXIS_SCALE};
pub use enhance::{enhance, percentile, EnhanceConfig};
pub use render::{draw_blobs, draw_ellipses, part_color, render_overlay, render_parts, render_semantic, Raster, RenderConfig, BLOB_COLOR, ELLIPSE_COLOR};
pub use semantic::PartRelevance;
