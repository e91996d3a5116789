//! Part-swap evaluation samples and manipulation-detection scores against a
//! ground-truth region.
//!
//! A part swap composites a fake clip into a real one inside a single
//! semantic face part, so the manipulated region is known exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array3, Array4, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Grid, Heatmap, Video};

/// Number of top pixels used by [`precision_at_k`] in reports.
pub const DEFAULT_TOP_K: usize = 100;

/// Face-part vocabulary. The discriminant is the `u8` label stored in mask
/// files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum PartLabel {
    Background = 0,
    Face = 1,
    Nose = 2,
    Mouth = 3,
    Eyes = 4,
    Ears = 5,
}

impl PartLabel {
    pub const ALL: [PartLabel; 6] = [
        PartLabel::Background,
        PartLabel::Face,
        PartLabel::Nose,
        PartLabel::Mouth,
        PartLabel::Eyes,
        PartLabel::Ears,
    ];

    /// Parts swapped per video when building an evaluation set.
    pub const SWAPPED: [PartLabel; 3] = [PartLabel::Eyes, PartLabel::Mouth, PartLabel::Nose];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        PartLabel::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::UnknownPart(code.to_string()))
    }

    pub fn name(self) -> &'static str {
        match self {
            PartLabel::Background => "background",
            PartLabel::Face => "face",
            PartLabel::Nose => "nose",
            PartLabel::Mouth => "mouth",
            PartLabel::Eyes => "eyes",
            PartLabel::Ears => "ears",
        }
    }
}

impl fmt::Display for PartLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PartLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PartLabel::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPart(s.to_string()))
    }
}

/// Per-pixel face-part labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PartMask {
    grid: Grid,
    labels: Array3<PartLabel>,
}

impl PartMask {
    pub fn new(labels: Array3<PartLabel>) -> Result<Self> {
        let grid = Grid::from_shape(labels.shape())?;
        Ok(PartMask {
            grid,
            labels: labels.as_standard_layout().into_owned(),
        })
    }

    pub fn from_codes(codes: &Array3<u8>) -> Result<Self> {
        let mut labels = Array3::from_elem(codes.dim(), PartLabel::Background);
        for (dst, &code) in labels.iter_mut().zip(codes.iter()) {
            *dst = PartLabel::from_code(code)?;
        }
        PartMask::new(labels)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn labels(&self) -> &Array3<PartLabel> {
        &self.labels
    }

    pub fn codes(&self) -> Array3<u8> {
        self.labels.mapv(PartLabel::code)
    }

    /// Binary indicator of one part; may be empty.
    pub fn indicator(&self, part: PartLabel) -> BinaryMask {
        BinaryMask {
            grid: self.grid,
            data: self.labels.mapv(|l| l == part),
        }
    }

    pub fn count(&self, part: PartLabel) -> usize {
        self.labels.iter().filter(|&&l| l == part).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    grid: Grid,
    data: Array3<bool>,
}

impl BinaryMask {
    pub fn new(data: Array3<bool>) -> Result<Self> {
        let grid = Grid::from_shape(data.shape())?;
        Ok(BinaryMask {
            grid,
            data: data.as_standard_layout().into_owned(),
        })
    }

    /// Nonzero entries are inside.
    pub fn from_u8(data: &Array3<u8>) -> Result<Self> {
        BinaryMask::new(data.mapv(|x| x != 0))
    }

    pub fn full(grid: Grid) -> Self {
        let [t, h, w] = grid.shape();
        BinaryMask {
            grid,
            data: Array3::from_elem((t, h, w), true),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn data(&self) -> &Array3<bool> {
        &self.data
    }

    pub fn contains(&self, flat: usize) -> bool {
        self.data.as_slice().expect("standard layout")[flat]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn to_u8(&self) -> Array3<u8> {
        self.data.mapv(u8::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub real_id: String,
    pub fake_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartSwapSample {
    pub video: Video,
    pub mask: BinaryMask,
    pub part: PartLabel,
    pub provenance: Option<Provenance>,
}

/// Takes the fake clip's pixels where the label equals `part` and the real
/// clip's pixels elsewhere. The two clips must already be aligned.
pub fn part_swap(real: &Video, fake: &Video, parts: &PartMask, part: PartLabel) -> Result<PartSwapSample> {
    real.grid().check_same(&fake.grid())?;
    real.grid().check_same(&parts.grid())?;
    if real.channels() != fake.channels() {
        return Err(Error::ShapeMismatch {
            expected: real.data().shape().to_vec(),
            found: fake.data().shape().to_vec(),
        });
    }
    let mask = parts.indicator(part);
    if mask.is_empty() {
        return Err(Error::EmptyPart(part));
    }
    let mut out: Array4<f64> = real.data().clone();
    for (((t, u, w, _), dst), &src) in out.indexed_iter_mut().zip(fake.data().iter()) {
        if mask.data[[t, u, w]] {
            *dst = src;
        }
    }
    Ok(PartSwapSample {
        video: Video::new(out)?,
        mask,
        part,
        provenance: None,
    })
}

/// Fraction of heatmap mass inside the mask.
pub fn mass_inside(h: &Heatmap, mask: &BinaryMask) -> Result<f64> {
    h.grid().check_same(&mask.grid())?;
    let mut total = 0.0;
    Zip::from(h.data()).and(mask.data()).for_each(|&v, &m| {
        if m {
            total += v;
        }
    });
    Ok(total)
}

/// Scan-order indices of the `k` most relevant pixels; ties go to the
/// lexicographically smaller `(t, u, w)`. Truncates to `N` when `k > N`.
pub fn top_k_indices(h: &Heatmap, k: usize) -> Vec<usize> {
    let values = h.values();
    let order = |&a: &usize, &b: &usize| -> Ordering { values[b].total_cmp(&values[a]).then(a.cmp(&b)) };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_by(order);
    idx
}

/// Fraction of the `k` most relevant pixels that fall inside the mask.
pub fn precision_at_k(h: &Heatmap, mask: &BinaryMask, k: usize) -> Result<f64> {
    h.grid().check_same(&mask.grid())?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let top = top_k_indices(h, k);
    let hits = top.iter().filter(|&&i| mask.contains(i)).count();
    Ok(hits as f64 / top.len() as f64)
}
