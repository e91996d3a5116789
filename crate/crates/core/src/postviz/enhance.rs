use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::blur3;
use crate::tensor::Heatmap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnhanceConfig {
    /// Values above this percentile (0..=100) are clipped to it.
    pub clip_percentile: f64,
    /// Spatial smoothing std, in pixels.
    pub smooth_std: f64,
    /// Temporal smoothing std, in frames; 0 smooths each frame on its own.
    pub temporal_std: f64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            clip_percentile: 99.0,
            smooth_std: 1.5,
            temporal_std: 0.0,
        }
    }
}

/// Percentile with linear interpolation between closest ranks (the
/// convention of most numerical libraries). `p` is in `[0, 100]`.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Clips extreme relevances, smooths, and renormalizes.
///
/// When the percentile value is zero (at least that share of the pixels
/// carry no relevance) clipping is skipped, since it would erase the whole
/// heatmap.
pub fn enhance(h: &Heatmap, cfg: &EnhanceConfig) -> Result<Heatmap> {
    if !(0.0..=100.0).contains(&cfg.clip_percentile) {
        return Err(Error::InvalidConfig("clip_percentile must lie in [0, 100]".into()));
    }
    if !(cfg.smooth_std >= 0.0 && cfg.temporal_std >= 0.0) {
        return Err(Error::InvalidConfig("smoothing stds must be nonnegative".into()));
    }
    let mut data = h.data().clone();
    let limit = percentile(h.values(), cfg.clip_percentile);
    if limit > 0.0 {
        data.mapv_inplace(|x| x.min(limit));
    }
    let smoothed = blur3(data.view(), [cfg.temporal_std, cfg.smooth_std, cfg.smooth_std]);
    Heatmap::from_relevance(smoothed)
}
