//! Video transforms: per-frame bilateral filter, spatio-temporal Gaussian
//! blur, and cutout by heavy local blur.
//!
//! All filters renormalize their kernels at the borders, so outputs are
//! convex combinations of input intensities.

mod bilateral;
mod cutout;
mod gaussian;

pub use bilateral::{bilateral_filter, BilateralConfig};
pub use cutout::{video_cutout, video_cutout_region, CutoutConfig, CutoutRegion};
pub use gaussian::{blur3, convolve_axis, gaussian_filter_3d, gaussian_kernel, kernel_radius, GaussianConfig};
