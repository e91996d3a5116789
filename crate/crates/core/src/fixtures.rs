//! Deterministic synthetic heatmaps, videos and face-part layouts.
//!
//! Every generator is a pure function of its spec; seeded kinds use ChaCha8
//! so fixtures are reproducible across platforms.

use ndarray::{Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manipulation::{PartLabel, PartMask};
use crate::tensor::{Coord, Grid, Heatmap, Video};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixtureKind {
    Uniform,
    OneHot { at: Coord },
    /// Isotropic Gaussian over `(t, u, w)` sampled at pixel centres and
    /// truncated to the grid. A zero std along time is not special-cased;
    /// use a single-frame grid for a 2D blob.
    GaussianBlob { std: f64, center: [f64; 3] },
    Checkerboard,
    /// Linear ramp along columns, `w + 1`.
    Ramp,
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub grid: [usize; 3],
    #[serde(flatten)]
    pub kind: FixtureKind,
}

impl FixtureSpec {
    pub fn new(grid: Grid, kind: FixtureKind) -> Self {
        FixtureSpec { grid: grid.shape(), kind }
    }
}

/// Unnormalized field for a fixture kind.
pub fn relevance_field(grid: Grid, kind: &FixtureKind) -> Result<Array3<f64>> {
    let [t, h, w] = grid.shape();
    let field = match kind {
        FixtureKind::Uniform => Array3::from_elem((t, h, w), 1.0),
        FixtureKind::OneHot { at } => {
            if !grid.contains(*at) {
                return Err(Error::OutOfGrid {
                    coord: *at,
                    grid: grid.shape(),
                });
            }
            let mut a = Array3::zeros((t, h, w));
            a[*at] = 1.0;
            a
        }
        FixtureKind::GaussianBlob { std, center } => {
            let inside = center.iter().zip(grid.shape()).all(|(&c, n)| c >= 0.0 && c <= (n - 1) as f64);
            if !inside {
                return Err(Error::InvalidConfig(format!("blob center {center:?} outside grid {:?}", grid.shape())));
            }
            if !(*std > 0.0) {
                return Err(Error::InvalidConfig("blob std must be positive".into()));
            }
            gaussian_bump(grid, *std, *center)
        }
        FixtureKind::Checkerboard => Array3::from_shape_fn((t, h, w), |(a, b, c)| ((a + b + c) % 2 == 0) as u8 as f64),
        FixtureKind::Ramp => Array3::from_shape_fn((t, h, w), |(_, _, c)| (c + 1) as f64),
        FixtureKind::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Array3::from_shape_fn((t, h, w), |_| rng.random::<f64>())
        }
    };
    Ok(field)
}

fn gaussian_bump(grid: Grid, std: f64, center: [f64; 3]) -> Array3<f64> {
    let [t, h, w] = grid.shape();
    Array3::from_shape_fn((t, h, w), |(a, b, c)| {
        let d2 = (a as f64 - center[0]).powi(2) + (b as f64 - center[1]).powi(2) + (c as f64 - center[2]).powi(2);
        (-d2 / (2.0 * std * std)).exp()
    })
}

pub fn make_heatmap(spec: &FixtureSpec) -> Result<Heatmap> {
    let grid = Grid::new(spec.grid[0], spec.grid[1], spec.grid[2])?;
    Heatmap::from_relevance(relevance_field(grid, &spec.kind)?)
}

/// Weighted sum of 2D Gaussian bumps in one frame, each normalized to its
/// own mass before weighting, on a single-frame grid.
pub fn gaussian_mixture_frame(rows: usize, cols: usize, blobs: &[(f64, [f64; 2], f64)]) -> Result<Heatmap> {
    let grid = Grid::new(1, rows, cols)?;
    let mut total = Array3::zeros((1, rows, cols));
    for &(mass, [u, w], std) in blobs {
        let bump = relevance_field(grid, &FixtureKind::GaussianBlob { std, center: [0.0, u, w] })?;
        let s = bump.sum();
        total.zip_mut_with(&bump, |acc, &b| *acc += mass * b / s);
    }
    Heatmap::from_relevance(total)
}

/// Rectangular stand-in for a face parser: the frame is cut into an 8x8
/// band grid with a background border, ears on the sides, and eyes, nose
/// and mouth inside the face. The same layout is used in every frame. All
/// parts are nonempty when rows and columns are both at least 8.
pub fn face_layout(grid: Grid) -> PartMask {
    let [t, h, w] = grid.shape();
    let labels = Array3::from_shape_fn((t, h, w), |(_, u, x)| {
        let bu = u * 8 / h;
        let bw = x * 8 / w;
        match (bu, bw) {
            (0 | 7, _) | (_, 0 | 7) => PartLabel::Background,
            (_, 1 | 6) => PartLabel::Ears,
            (2, 2..=5) => PartLabel::Eyes,
            (3..=4, 3..=4) => PartLabel::Nose,
            (5, 2..=5) => PartLabel::Mouth,
            _ => PartLabel::Face,
        }
    });
    PartMask::new(labels).expect("layout shape comes from a valid grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub grid: [usize; 3],
    pub channels: usize,
    pub seed: u64,
    /// Intensity added to the fake clip inside the planted part.
    pub offset: f64,
}

impl Default for PairSpec {
    fn default() -> Self {
        PairSpec {
            grid: [4, 32, 32],
            channels: 3,
            seed: 0,
            offset: 0.2,
        }
    }
}

/// A real clip, a fake clip that differs only inside `planted` by a fixed
/// offset, and the face layout they share.
pub fn make_aligned_pair(spec: &PairSpec, planted: PartLabel) -> Result<(Video, Video, PartMask)> {
    let grid = Grid::new(spec.grid[0], spec.grid[1], spec.grid[2])?;
    if !(0.0..=1.0).contains(&spec.offset) {
        return Err(Error::InvalidConfig("offset must lie in [0, 1]".into()));
    }
    let parts = face_layout(grid);
    if parts.count(planted) == 0 {
        return Err(Error::EmptyPart(planted));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let [t, h, w] = grid.shape();
    let ceiling = 1.0 - spec.offset;
    let real = Array4::from_shape_fn((t, h, w, spec.channels), |_| ceiling * rng.random::<f64>());
    let mut fake = real.clone();
    for ((a, b, c, _), x) in fake.indexed_iter_mut() {
        if parts.labels()[[a, b, c]] == planted {
            *x += spec.offset;
        }
    }
    Ok((Video::new(real)?, Video::new(fake)?, parts))
}

/// Seeded uniform-noise video.
pub fn random_video(grid: Grid, channels: usize, seed: u64) -> Result<Video> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [t, h, w] = grid.shape();
    Video::new(Array4::from_shape_fn((t, h, w, channels), |_| rng.random::<f64>()))
}
