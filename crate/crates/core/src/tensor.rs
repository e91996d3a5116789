//! Dense video, heatmap and attribution containers over a discrete
//! `T x H x W` grid.
//!
//! Arrays are row-major with index order `(t, u, w[, c])`, where `t` is the
//! frame, `u` the pixel row and `w` the pixel column. Heatmaps carry unit
//! total mass (probability convention, `sum h = 1`).

use ndarray::{Array3, Array4, ArrayView3, ArrayView4, Axis, Zip};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a [`Heatmap`].
pub const MASS_TOLERANCE: f64 = 1e-6;

/// Pixel coordinates `(t, u, w)`, 0-based.
pub type Coord = [usize; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    t: usize,
    h: usize,
    w: usize,
}

impl Grid {
    pub fn new(t: usize, h: usize, w: usize) -> Result<Self> {
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::InvalidGrid { t, h, w });
        }
        Ok(Grid { t, h, w })
    }

    pub fn from_shape(shape: &[usize]) -> Result<Self> {
        if shape.len() < 3 {
            return Err(Error::ShapeMismatch {
                expected: vec![0, 0, 0],
                found: shape.to_vec(),
            });
        }
        Grid::new(shape[0], shape[1], shape[2])
    }

    pub fn frames(&self) -> usize {
        self.t
    }

    pub fn rows(&self) -> usize {
        self.h
    }

    pub fn cols(&self) -> usize {
        self.w
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.t, self.h, self.w]
    }

    /// Total pixel count `N = T * H * W`.
    pub fn len(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, at: Coord) -> bool {
        at[0] < self.t && at[1] < self.h && at[2] < self.w
    }

    pub fn flat_index(&self, at: Coord) -> usize {
        (at[0] * self.h + at[1]) * self.w + at[2]
    }

    pub fn coord(&self, flat: usize) -> Coord {
        let w = flat % self.w;
        let rest = flat / self.w;
        [rest / self.h, rest % self.h, w]
    }

    /// All coordinates in scan (row-major) order.
    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (0..self.len()).map(move |i| self.coord(i))
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch {
                expected: self.shape().to_vec(),
                found: other.shape().to_vec(),
            });
        }
        Ok(())
    }
}

/// A `T x H x W x C` clip with intensities in `[0, 1]`, `C` in `{1, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    grid: Grid,
    data: Array4<f64>,
}

impl Video {
    pub fn new(data: Array4<f64>) -> Result<Self> {
        let grid = Grid::from_shape(data.shape())?;
        let channels = data.shape()[3];
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedChannels(channels));
        }
        for (index, &value) in data.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::IntensityOutOfRange { index, value });
            }
        }
        Ok(Video {
            grid,
            data: data.as_standard_layout().into_owned(),
        })
    }

    pub fn zeros(grid: Grid, channels: usize) -> Result<Self> {
        let [t, h, w] = grid.shape();
        Video::new(Array4::zeros((t, h, w, channels)))
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[3]
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView4<'_, f64> {
        self.data.view()
    }

    pub fn into_array(self) -> Array4<f64> {
        self.data
    }
}

/// Nonnegative per-pixel relevance with unit total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    grid: Grid,
    data: Array3<f64>,
}

impl Heatmap {
    /// Wraps an array that must already be nonnegative with mass 1.
    pub fn new(data: Array3<f64>) -> Result<Self> {
        let grid = Grid::from_shape(data.shape())?;
        check_nonnegative(data.iter())?;
        let mass: f64 = data.sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotUnitMass(mass));
        }
        Ok(Heatmap {
            grid,
            data: data.as_standard_layout().into_owned(),
        })
    }

    /// Divides a nonnegative relevance field by its total.
    pub fn from_relevance(mut data: Array3<f64>) -> Result<Self> {
        Grid::from_shape(data.shape())?;
        check_nonnegative(data.iter())?;
        let mass: f64 = data.sum();
        if mass <= 0.0 {
            return Err(Error::DegenerateHeatmap);
        }
        data.mapv_inplace(|x| x / mass);
        Heatmap::new(data)
    }

    pub fn uniform(grid: Grid) -> Self {
        let [t, h, w] = grid.shape();
        let v = 1.0 / grid.len() as f64;
        Heatmap {
            grid,
            data: Array3::from_elem((t, h, w), v),
        }
    }

    pub fn one_hot(grid: Grid, at: Coord) -> Result<Self> {
        if !grid.contains(at) {
            return Err(Error::OutOfGrid {
                coord: at,
                grid: grid.shape(),
            });
        }
        let [t, h, w] = grid.shape();
        let mut data = Array3::zeros((t, h, w));
        data[at] = 1.0;
        Ok(Heatmap { grid, data })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &Array3<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView3<'_, f64> {
        self.data.view()
    }

    /// Values in scan order.
    pub fn values(&self) -> &[f64] {
        self.data
            .as_slice()
            .expect("heatmaps are stored in standard layout")
    }

    pub fn get(&self, at: Coord) -> Option<f64> {
        self.data.get(at).copied()
    }

    pub fn into_array(self) -> Array3<f64> {
        self.data
    }
}

fn check_nonnegative<'a>(values: impl Iterator<Item = &'a f64>) -> Result<()> {
    for (index, &value) in values.enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite(index));
        }
        if value < 0.0 {
            return Err(Error::NegativeRelevance { index, value });
        }
    }
    Ok(())
}

/// Signed, per-channel output of an explanation method prior to
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAttribution {
    grid: Grid,
    data: Array4<f64>,
}

impl RawAttribution {
    pub fn new(data: Array4<f64>) -> Result<Self> {
        let grid = Grid::from_shape(data.shape())?;
        if data.shape()[3] == 0 {
            return Err(Error::UnsupportedChannels(0));
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(index));
        }
        Ok(RawAttribution {
            grid,
            data: data.as_standard_layout().into_owned(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[3]
    }

    pub fn data(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array4<f64> {
        self.data
    }
}

/// L1 norm of the forward differences of `h` at `at`. Neighbours that fall
/// outside the grid contribute nothing.
pub fn discrete_gradient_l1(h: &Heatmap, at: Coord) -> Result<f64> {
    let grid = h.grid();
    if !grid.contains(at) {
        return Err(Error::OutOfGrid {
            coord: at,
            grid: grid.shape(),
        });
    }
    Ok(forward_difference_l1(h.view(), at))
}

pub(crate) fn forward_difference_l1(field: ArrayView3<'_, f64>, at: Coord) -> f64 {
    let here = field[at];
    let mut total = 0.0;
    for axis in 0..3 {
        let mut next = at;
        next[axis] += 1;
        if let Some(&there) = field.get(next) {
            total += (here - there).abs();
        }
    }
    total
}

/// Collapses channels by summing absolute values, then normalizes to unit
/// mass.
pub fn normalize_attribution(a: &RawAttribution) -> Result<Heatmap> {
    let relevance = a.data().map_axis(Axis(3), |px| px.iter().map(|x| x.abs()).sum::<f64>());
    let total: f64 = relevance.sum();
    if total == 0.0 {
        return Err(Error::DegenerateHeatmap);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let mut data = relevance;
    Zip::from(&mut data).for_each(|x| *x /= total);
    Heatmap::new(data)
}
