use ndarray::Array4;
use serde::{Deserialize, Serialize};

use super::gaussian::{clamp_unit, kernel_radius};
use crate::error::{Error, Result};
use crate::tensor::Video;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilateralConfig {
    /// Spatial standard deviation, in pixels.
    pub spatial_std: f64,
    /// Range standard deviation, as a fraction of the intensity range.
    pub range_std: f64,
    /// Half-width of the square window; `ceil(3 * spatial_std)` by default.
    pub radius: usize,
}

impl Default for BilateralConfig {
    fn default() -> Self {
        BilateralConfig::new(2.0, 0.1)
    }
}

impl BilateralConfig {
    pub fn new(spatial_std: f64, range_std: f64) -> Self {
        BilateralConfig {
            spatial_std,
            range_std,
            radius: kernel_radius(spatial_std),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_std > 0.0 && self.range_std > 0.0) {
            return Err(Error::InvalidConfig("bilateral standard deviations must be positive".into()));
        }
        Ok(())
    }
}

/// Edge-preserving smoothing of each frame independently. The range weight
/// uses the Euclidean distance between the channel vectors of two pixels.
pub fn bilateral_filter(v: &Video, cfg: &BilateralConfig) -> Result<Video> {
    cfg.validate()?;
    let data = v.data();
    let (t_len, h, w, channels) = data.dim();
    let r = cfg.radius as isize;
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|du| (-r..=r).map(move |dw| (du, dw)))
        .map(|(du, dw)| (-((du * du + dw * dw) as f64) / (2.0 * cfg.spatial_std * cfg.spatial_std)).exp())
        .collect();
    let range_denom = 2.0 * cfg.range_std * cfg.range_std;
    let side = (2 * r + 1) as usize;

    let mut out = Array4::zeros(data.raw_dim());
    let mut acc = vec![0.0; channels];
    for t in 0..t_len {
        for u in 0..h {
            for x in 0..w {
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut norm = 0.0;
                for du in -r..=r {
                    let uu = u as isize + du;
                    if uu < 0 || uu >= h as isize {
                        continue;
                    }
                    for dw in -r..=r {
                        let ww = x as isize + dw;
                        if ww < 0 || ww >= w as isize {
                            continue;
                        }
                        let (uu, ww) = (uu as usize, ww as usize);
                        let mut dist2 = 0.0;
                        for c in 0..channels {
                            let d = data[[t, u, x, c]] - data[[t, uu, ww, c]];
                            dist2 += d * d;
                        }
                        let wgt = spatial[(du + r) as usize * side + (dw + r) as usize] * (-dist2 / range_denom).exp();
                        norm += wgt;
                        for (c, a) in acc.iter_mut().enumerate() {
                            *a += wgt * data[[t, uu, ww, c]];
                        }
                    }
                }
                for (c, a) in acc.iter().enumerate() {
                    out[[t, u, x, c]] = a / norm;
                }
            }
        }
    }
    Video::new(clamp_unit(out))
}
