use ndarray::{Array3, Array4, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Video;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianConfig {
    /// Standard deviation along rows and columns, in pixels.
    pub spatial_std: f64,
    /// Standard deviation along time, in frames.
    pub temporal_std: f64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        GaussianConfig {
            spatial_std: 0.8,
            temporal_std: 0.5,
        }
    }
}

impl GaussianConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [("spatial_std", self.spatial_std), ("temporal_std", self.temporal_std)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

/// Truncation radius `ceil(3 * std)`.
pub fn kernel_radius(std: f64) -> usize {
    (3.0 * std).ceil() as usize
}

/// Unnormalized Gaussian taps `exp(-i^2 / 2 std^2)` for `i` in
/// `-radius..=radius`. A zero std yields the single tap `[1]`.
pub fn gaussian_kernel(std: f64, radius: usize) -> Vec<f64> {
    if std == 0.0 {
        return vec![1.0];
    }
    let r = radius as isize;
    (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * std * std)).exp())
        .collect()
}

/// Convolves every lane along `axis` with a symmetric kernel. Taps that
/// fall outside the array are dropped and the remaining weights
/// renormalized.
pub fn convolve_axis(data: ArrayView3<'_, f64>, axis: usize, kernel: &[f64]) -> Array3<f64> {
    let mut out = data.to_owned();
    if kernel.len() <= 1 {
        return out;
    }
    let r = (kernel.len() / 2) as isize;
    let mut buf = Vec::new();
    for mut lane in out.lanes_mut(Axis(axis)) {
        buf.clear();
        buf.extend(lane.iter().copied());
        let n = buf.len() as isize;
        for (x, dst) in lane.iter_mut().enumerate() {
            let x = x as isize;
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (k, &wgt) in kernel.iter().enumerate() {
                let j = x + k as isize - r;
                if (0..n).contains(&j) {
                    acc += wgt * buf[j as usize];
                    norm += wgt;
                }
            }
            *dst = acc / norm;
        }
    }
    out
}

/// Separable Gaussian blur of a `T x H x W` field with per-axis stds
/// `(t, u, w)`.
pub fn blur3(data: ArrayView3<'_, f64>, stds: [f64; 3]) -> Array3<f64> {
    let mut out = data.to_owned();
    for (axis, &std) in stds.iter().enumerate() {
        if std > 0.0 {
            let kernel = gaussian_kernel(std, kernel_radius(std));
            out = convolve_axis(out.view(), axis, &kernel);
        }
    }
    out
}

pub(crate) fn blur_channels(data: &Array4<f64>, stds: [f64; 3]) -> Array4<f64> {
    let mut out = data.clone();
    for c in 0..data.shape()[3] {
        let blurred = blur3(data.index_axis(Axis(3), c), stds);
        out.index_axis_mut(Axis(3), c).assign(&blurred);
    }
    out
}

/// Rounding can push a convex combination of values in `[0, 1]` a few ulps
/// outside that interval.
pub(crate) fn clamp_unit(mut data: Array4<f64>) -> Array4<f64> {
    data.mapv_inplace(|x| x.clamp(0.0, 1.0));
    data
}

/// Spatio-temporal Gaussian blur, each channel independently.
pub fn gaussian_filter_3d(v: &Video, cfg: &GaussianConfig) -> Result<Video> {
    cfg.validate()?;
    let stds = [cfg.temporal_std, cfg.spatial_std, cfg.spatial_std];
    Video::new(clamp_unit(blur_channels(v.data(), stds)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Non-separable reference: full 3D window, weights multiplied, clipped
    /// at the borders and renormalized.
    fn direct_blur(data: &Array3<f64>, stds: [f64; 3]) -> Array3<f64> {
        let (t, h, w) = data.dim();
        let radii: Vec<isize> = stds.iter().map(|&s| if s > 0.0 { kernel_radius(s) as isize } else { 0 }).collect();
        let weight = |d: isize, s: f64| if s > 0.0 { (-((d * d) as f64) / (2.0 * s * s)).exp() } else { 1.0 };
        let mut out = Array3::zeros((t, h, w));
        for ((a, b, c), dst) in out.indexed_iter_mut() {
            let (mut acc, mut norm) = (0.0, 0.0);
            for da in -radii[0]..=radii[0] {
                for db in -radii[1]..=radii[1] {
                    for dc in -radii[2]..=radii[2] {
                        let (x, y, z) = (a as isize + da, b as isize + db, c as isize + dc);
                        if x < 0 || y < 0 || z < 0 || x >= t as isize || y >= h as isize || z >= w as isize {
                            continue;
                        }
                        let k = weight(da, stds[0]) * weight(db, stds[1]) * weight(dc, stds[2]);
                        acc += k * data[[x as usize, y as usize, z as usize]];
                        norm += k;
                    }
                }
            }
            *dst = acc / norm;
        }
        out
    }

    #[test]
    fn constant_video_unchanged() {
        let v = Video::new(Array4::from_elem((3, 5, 6, 3), 0.3)).unwrap();
        let out = gaussian_filter_3d(&v, &GaussianConfig::default()).unwrap();
        for (a, b) in out.data().iter().zip(v.data()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_std_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = Video::new(Array4::from_shape_fn((2, 4, 4, 3), |_| rng.random())).unwrap();
        let cfg = GaussianConfig {
            spatial_std: 0.0,
            temporal_std: 0.0,
        };
        assert_eq!(gaussian_filter_3d(&v, &cfg).unwrap(), v);
    }

    #[test]
    fn impulse_response_is_outer_product() {
        // every output within reach of the impulse has a full in-grid window
        let (t, h, w) = (9, 13, 13);
        let mut data = Array3::zeros((t, h, w));
        data[[4, 6, 6]] = 1.0;
        let stds = [0.5, 0.8, 0.8];
        let out = blur3(data.view(), stds);
        let k: Vec<Vec<f64>> = stds
            .iter()
            .map(|&s| {
                let k = gaussian_kernel(s, kernel_radius(s));
                let total: f64 = k.iter().sum();
                k.into_iter().map(|x| x / total).collect()
            })
            .collect();
        let (r0, r1) = (kernel_radius(0.5) as isize, kernel_radius(0.8) as isize);
        for ((a, b, c), &x) in out.indexed_iter() {
            let (da, db, dc) = (a as isize - 4, b as isize - 6, c as isize - 6);
            let expected = if da.abs() <= r0 && db.abs() <= r1 && dc.abs() <= r1 {
                k[0][(da + r0) as usize] * k[1][(db + r1) as usize] * k[2][(dc + r1) as usize]
            } else {
                0.0
            };
            assert!((x - expected).abs() <= 1e-15, "{:?}: {x} vs {expected}", (a, b, c));
        }
    }

    #[test]
    fn separable_matches_direct_with_borders() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = Array3::from_shape_fn((3, 5, 5), |_| rng.random::<f64>());
        for stds in [[0.5, 0.8, 0.8], [1.0, 2.0, 1.5], [0.0, 1.0, 0.0]] {
            let a = blur3(data.view(), stds);
            let b = direct_blur(&data, stds);
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn negative_std_rejected() {
        let v = Video::new(Array4::zeros((1, 2, 2, 1))).unwrap();
        let cfg = GaussianConfig {
            spatial_std: -1.0,
            temporal_std: 0.0,
        };
        assert!(gaussian_filter_3d(&v, &cfg).is_err());
    }
}
