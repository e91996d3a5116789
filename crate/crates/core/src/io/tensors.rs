//! Conversions between raw arrays and the typed containers.
//!
//! Videos are `T x H x W x C` (a 3D array is read as one channel), either
//! float in `[0, 1]` or `uint8` scaled by `1/255`. Heatmaps are `T x H x W`
//! floats. Masks are `T x H x W` `uint8`: part codes for a part map, any
//! nonzero value for a binary region.

use std::path::Path;

use ndarray::{Array3, Array4, Ix3, Ix4};

use super::npy::{read_array, ArrayData, Dtype};
use crate::error::{Error, Result};
use crate::manipulation::{BinaryMask, PartMask};
use crate::tensor::{Heatmap, Video};

fn rank_error(shape: &[usize], wanted: &str) -> Error {
    Error::MalformedHeader(format!("expected a {wanted} array, found shape {shape:?}"))
}

pub fn video_from_array(a: &ArrayData) -> Result<Video> {
    let data = match a {
        ArrayData::U8(x) => x.mapv(|b| b as f64 / 255.0),
        other => other.to_f64(),
    };
    let data = match data.ndim() {
        3 => data.insert_axis(ndarray::Axis(3)),
        _ => data,
    };
    let shape = data.shape().to_vec();
    let data: Array4<f64> = data.into_dimensionality::<Ix4>().map_err(|_| rank_error(&shape, "T x H x W x C"))?;
    Video::new(data)
}

/// Stores a video with the given element type. Writing `uint8` rounds to
/// the nearest level, which is lossless for videos that were read as
/// `uint8`.
pub fn video_to_array(v: &Video, dtype: Dtype) -> ArrayData {
    let d = v.data();
    match dtype {
        Dtype::F64 => ArrayData::F64(d.clone().into_dyn()),
        Dtype::F32 => ArrayData::F32(d.mapv(|x| x as f32).into_dyn()),
        Dtype::U8 => ArrayData::U8(d.mapv(|x| (x * 255.0).round() as u8).into_dyn()),
    }
}

/// Reads a heatmap. With `normalize` the array is treated as raw
/// nonnegative relevance and rescaled to unit mass; otherwise it must
/// already have unit mass.
pub fn heatmap_from_array(a: &ArrayData, normalize: bool) -> Result<Heatmap> {
    let data = a.to_f64();
    let shape = data.shape().to_vec();
    let data: Array3<f64> = data.into_dimensionality::<Ix3>().map_err(|_| rank_error(&shape, "T x H x W"))?;
    if normalize {
        Heatmap::from_relevance(data)
    } else {
        Heatmap::new(data)
    }
}

pub fn heatmap_to_array(h: &Heatmap) -> ArrayData {
    ArrayData::F64(h.data().clone().into_dyn())
}

fn mask_codes(a: &ArrayData) -> Result<Array3<u8>> {
    let ArrayData::U8(x) = a else {
        return Err(Error::UnsupportedDtype(format!("{} (masks must be uint8)", a.dtype().descr())));
    };
    x.clone()
        .into_dimensionality::<Ix3>()
        .map_err(|_| rank_error(a.shape(), "T x H x W"))
}

pub fn part_mask_from_array(a: &ArrayData) -> Result<PartMask> {
    PartMask::from_codes(&mask_codes(a)?)
}

pub fn binary_mask_from_array(a: &ArrayData) -> Result<BinaryMask> {
    BinaryMask::from_u8(&mask_codes(a)?)
}

pub fn load_video(path: &Path) -> Result<Video> {
    video_from_array(&read_array(path)?).map_err(|e| e.at(path))
}

pub fn load_heatmap(path: &Path, normalize: bool) -> Result<Heatmap> {
    heatmap_from_array(&read_array(path)?, normalize).map_err(|e| e.at(path))
}

pub fn load_part_mask(path: &Path) -> Result<PartMask> {
    part_mask_from_array(&read_array(path)?).map_err(|e| e.at(path))
}

pub fn load_binary_mask(path: &Path) -> Result<BinaryMask> {
    binary_mask_from_array(&read_array(path)?).map_err(|e| e.at(path))
}
