use ndarray::s;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::{blur_channels, clamp_unit};
use crate::error::{Error, Result};
use crate::tensor::Video;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoutConfig {
    /// Patch size `(rows, cols)`.
    pub patch: [usize; 2],
    /// Std of the blur, applied along rows, columns and time.
    pub blur_std: f64,
    pub probability: f64,
    pub seed: u64,
}

impl Default for CutoutConfig {
    fn default() -> Self {
        CutoutConfig {
            patch: [64, 64],
            blur_std: 4.0,
            probability: 0.5,
            seed: 0,
        }
    }
}

/// Top-left corner and size of an applied cutout patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutoutRegion {
    pub top: usize,
    pub left: usize,
    pub rows: usize,
    pub cols: usize,
}

/// With probability `cfg.probability`, blurs a uniformly placed patch in
/// every frame of the clip. Pixels outside the patch are copied verbatim.
pub fn video_cutout(v: &Video, cfg: &CutoutConfig) -> Result<Video> {
    Ok(video_cutout_region(v, cfg)?.0)
}

pub fn video_cutout_region(v: &Video, cfg: &CutoutConfig) -> Result<(Video, Option<CutoutRegion>)> {
    let grid = v.grid();
    let [rows, cols] = cfg.patch;
    if rows == 0 || cols == 0 || rows > grid.rows() || cols > grid.cols() {
        return Err(Error::InvalidConfig(format!(
            "cutout patch {rows}x{cols} does not fit a {}x{} frame",
            grid.rows(),
            grid.cols()
        )));
    }
    if !(0.0..=1.0).contains(&cfg.probability) {
        return Err(Error::InvalidConfig("cutout probability must lie in [0, 1]".into()));
    }
    if !(cfg.blur_std >= 0.0 && cfg.blur_std.is_finite()) {
        return Err(Error::InvalidConfig("cutout blur_std must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if !rng.random_bool(cfg.probability) {
        return Ok((v.clone(), None));
    }
    let top = rng.random_range(0..=grid.rows() - rows);
    let left = rng.random_range(0..=grid.cols() - cols);
    let region = CutoutRegion { top, left, rows, cols };

    let mut data = v.data().clone();
    let patch = data.slice(s![.., top..top + rows, left..left + cols, ..]).to_owned();
    let blurred = clamp_unit(blur_channels(&patch, [cfg.blur_std; 3]));
    data.slice_mut(s![.., top..top + rows, left..left + cols, ..]).assign(&blurred);
    Ok((Video::new(data)?, Some(region)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{gaussian_filter_3d, GaussianConfig};
    use ndarray::Array4;

    fn random_video(seed: u64) -> Video {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Video::new(Array4::from_shape_fn((3, 20, 24, 3), |_| rng.random())).unwrap()
    }

    fn cfg(probability: f64, seed: u64) -> CutoutConfig {
        CutoutConfig {
            patch: [8, 10],
            blur_std: 4.0,
            probability,
            seed,
        }
    }

    #[test]
    fn zero_probability_is_identity() {
        let v = random_video(1);
        for seed in 0..10 {
            let (out, region) = video_cutout_region(&v, &cfg(0.0, seed)).unwrap();
            assert_eq!(out, v);
            assert!(region.is_none());
        }
    }

    #[test]
    fn outside_patch_untouched_and_inside_blurred() {
        let v = random_video(2);
        let (out, region) = video_cutout_region(&v, &cfg(1.0, 7)).unwrap();
        let r = region.unwrap();
        let inside = |u: usize, w: usize| u >= r.top && u < r.top + r.rows && w >= r.left && w < r.left + r.cols;
        for ((t, u, w, c), &x) in out.data().indexed_iter() {
            if !inside(u, w) {
                assert_eq!(x.to_bits(), v.data()[[t, u, w, c]].to_bits());
            }
        }
        let crop = Video::new(v.data().slice(s![.., r.top..r.top + r.rows, r.left..r.left + r.cols, ..]).to_owned()).unwrap();
        let oracle = gaussian_filter_3d(
            &crop,
            &GaussianConfig {
                spatial_std: 4.0,
                temporal_std: 4.0,
            },
        )
        .unwrap();
        let got = out.data().slice(s![.., r.top..r.top + r.rows, r.left..r.left + r.cols, ..]);
        assert_eq!(got, oracle.data());
    }

    #[test]
    fn seeded_and_roughly_half_applied() {
        let v = random_video(3);
        let applied = (0..200)
            .filter(|&s| video_cutout_region(&v, &cfg(0.5, s)).unwrap().1.is_some())
            .count();
        assert!((70..130).contains(&applied));
        let a = video_cutout_region(&v, &cfg(0.5, 42)).unwrap();
        let b = video_cutout_region(&v, &cfg(0.5, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_patch_rejected() {
        let v = random_video(4);
        let mut c = cfg(1.0, 0);
        c.patch = [64, 64];
        assert!(video_cutout(&v, &c).is_err());
    }
}
