//! File formats: `.npy`/`.npz` arrays, sample manifests and metrics
//! reports.

mod manifest;
pub mod npy;
pub mod npz;
mod report;
mod tensors;

pub use manifest::{ManifestEntry, SampleManifest, SwapManifest, SwapRecord};
pub use npy::{read_array, write_array, ArrayData, Dtype};
pub use npz::{read_bundle, write_bundle};
pub use report::{Aggregate, MetricsReport, MetricsRow, AGGREGATED};
pub use tensors::{
    binary_mask_from_array, heatmap_from_array, heatmap_to_array, load_binary_mask, load_heatmap, load_part_mask, load_video,
    part_mask_from_array, video_from_array, video_to_array,
};
