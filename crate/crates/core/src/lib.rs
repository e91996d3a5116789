//! Quantitative quality metrics for heatmap explanations of video
//! classifiers.
//!
//! The crate covers the whole evaluation loop on dense `T x H x W` grids:
//!
//! * [`tensor`]: video, heatmap and attribution containers;
//! * [`metrics`]: total variation, covariance-volume locality, Gini sparsity;
//! * [`manipulation`]: part-swap samples, mass inside a region, precision at k;
//! * [`explain`]: gradient attribution methods and deletion curves;
//! * [`filters`]: bilateral, spatio-temporal Gaussian and cutout transforms;
//! * [`postviz`]: enhancement, ellipse matching, blob detection, part
//!   aggregation and overlay rendering;
//! * [`io`]: array files, sample manifests and metrics reports;
//! * [`fixtures`]: deterministic synthetic inputs.

pub mod error;
pub mod explain;
pub mod filters;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod manipulation;
pub mod metrics;
pub mod postviz;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Coord, Grid, Heatmap, RawAttribution, Video};

/// Version string embedded in reports.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
