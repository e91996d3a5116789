use ndarray::{s, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::blur3;
use crate::tensor::Heatmap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlobConfig {
    /// Increasing Gaussian scales in pixels. Differences are taken between
    /// neighbouring scales, so at least two are needed.
    pub scales: Vec<f64>,
    /// Minimum response, relative to the frame mass.
    pub threshold: f64,
}

impl Default for BlobConfig {
    fn default() -> Self {
        BlobConfig {
            scales: vec![1.0, 2.0, 4.0, 8.0],
            threshold: 1e-4,
        }
    }
}

impl BlobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scales.len() < 2 {
            return Err(Error::InvalidConfig("blob detection needs at least two scales".into()));
        }
        if !self.scales.windows(2).all(|p| p[0] > 0.0 && p[0] < p[1] && p[1].is_finite()) {
            return Err(Error::InvalidConfig("blob scales must be positive and strictly increasing".into()));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::InvalidConfig("blob threshold must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub frame: usize,
    /// `(u, w)` pixel position.
    pub center: [usize; 2],
    /// Detection scale (std in pixels).
    pub scale: f64,
    /// Heatmap mass within `sqrt(2) * scale` of the centre.
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlobSet {
    /// Sorted by descending score.
    pub blobs: Vec<Blob>,
}

/// Scale-normalized difference-of-Gaussians stack for one frame:
/// `scale_i * (G(scale_i) - G(scale_{i+1}))`, one layer per scale pair.
fn dog_stack(frame: ArrayView2<'_, f64>, scales: &[f64]) -> Array3<f64> {
    let f3 = frame.insert_axis(Axis(0));
    let blurred: Vec<Array3<f64>> = scales.iter().map(|&s| blur3(f3, [0.0, s, s])).collect();
    let (h, w) = frame.dim();
    let mut out = Array3::zeros((scales.len() - 1, h, w));
    for i in 0..scales.len() - 1 {
        let d = (&blurred[i] - &blurred[i + 1]) * scales[i];
        out.slice_mut(s![i, .., ..]).assign(&d.index_axis(Axis(0), 0));
    }
    out
}

/// Local maxima of `dog` over its 3x3x3 (scale, u, w) neighbourhood.
/// Plateaus are resolved towards the first cell in scan order.
fn local_maxima(dog: &Array3<f64>, min_response: f64) -> Vec<(usize, usize, usize)> {
    let (n, h, w) = dog.dim();
    let mut out = Vec::new();
    for ((k, u, x), &v) in dog.indexed_iter() {
        if v <= min_response {
            continue;
        }
        let mut is_max = true;
        'scan: for dk in -1isize..=1 {
            for du in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dk == 0 && du == 0 && dx == 0 {
                        continue;
                    }
                    let (a, b, c) = (k as isize + dk, u as isize + du, x as isize + dx);
                    if a < 0 || b < 0 || c < 0 || a >= n as isize || b >= h as isize || c >= w as isize {
                        continue;
                    }
                    let other = dog[[a as usize, b as usize, c as usize]];
                    let earlier = (a, b, c) < (k as isize, u as isize, x as isize);
                    if other > v || (earlier && other == v) {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
        }
        if is_max {
            out.push((k, u, x));
        }
    }
    out
}

fn disc_mass(frame: ArrayView2<'_, f64>, center: [usize; 2], radius: f64) -> f64 {
    let r2 = radius * radius;
    frame
        .indexed_iter()
        .filter(|((u, w), _)| {
            let du = *u as f64 - center[0] as f64;
            let dw = *w as f64 - center[1] as f64;
            du * du + dw * dw <= r2
        })
        .map(|(_, &p)| p)
        .sum()
}

/// Multi-scale blob detection, frame by frame.
pub fn detect_blobs(h: &Heatmap, cfg: &BlobConfig) -> Result<BlobSet> {
    cfg.validate()?;
    let mut blobs = Vec::new();
    for (t, frame) in h.data().axis_iter(Axis(0)).enumerate() {
        let mass = frame.sum();
        if mass <= 0.0 {
            continue;
        }
        let dog = dog_stack(frame, &cfg.scales);
        for (k, u, w) in local_maxima(&dog, cfg.threshold * mass) {
            let scale = cfg.scales[k];
            blobs.push(Blob {
                frame: t,
                center: [u, w],
                scale,
                score: disc_mass(frame, [u, w], std::f64::consts::SQRT_2 * scale),
            });
        }
    }
    blobs.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.frame.cmp(&b.frame))
            .then(a.center.cmp(&b.center))
            .then(a.scale.total_cmp(&b.scale))
    });
    Ok(BlobSet { blobs })
}
