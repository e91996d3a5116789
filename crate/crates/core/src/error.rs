use std::path::PathBuf;

use thiserror::Error;

use crate::manipulation::PartLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid {t}x{h}x{w}: every extent must be at least 1")]
    InvalidGrid { t: usize, h: usize, w: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("coordinates {coord:?} lie outside grid {grid:?}")]
    OutOfGrid { coord: [usize; 3], grid: [usize; 3] },

    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),

    #[error("intensity {value} at flat index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("negative relevance {value} at flat index {index}")]
    NegativeRelevance { index: usize, value: f64 },

    #[error("heatmap mass {0} is not 1 within tolerance")]
    NotUnitMass(f64),

    #[error("attribution is identically zero and cannot be normalized into a heatmap")]
    DegenerateHeatmap,

    #[error("part `{0}` occupies no pixels")]
    EmptyPart(PartLabel),

    #[error("unknown part label {0}")]
    UnknownPart(String),

    #[error("mask is empty")]
    EmptyMask,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad magic bytes: not an array file")]
    BadMagic,

    #[error("unsupported array format version {0}.{1}")]
    UnsupportedVersion(u8, u8),

    #[error("unsupported dtype `{0}`")]
    UnsupportedDtype(String),

    #[error("fortran-ordered arrays are not supported")]
    FortranOrder,

    #[error("malformed array header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("arrays must have rank at least 1")]
    ZeroRank,

    #[error("archive error: {0}")]
    Archive(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("png encoding failed: {0}")]
    Png(String),
}

impl Error {
    /// Attach the offending file path to an error.
    pub fn at(self, path: impl Into<PathBuf>) -> Error {
        Error::Path {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// True for failures caused by unreadable or malformed input rather than
    /// by a computation on valid input.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Path { source, .. } => source.is_input_error(),
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::BadMagic
            | Error::UnsupportedVersion(..)
            | Error::UnsupportedDtype(_)
            | Error::FortranOrder
            | Error::MalformedHeader(_)
            | Error::TruncatedPayload { .. }
            | Error::ZeroRank
            | Error::Archive(_)
            | Error::Report(_)
            | Error::ShapeMismatch { .. }
            | Error::UnsupportedChannels(_)
            | Error::IntensityOutOfRange { .. }
            | Error::NegativeRelevance { .. }
            | Error::NotUnitMass(_)
            | Error::NonFinite(_)
            | Error::UnknownPart(_)
            | Error::InvalidConfig(_)
            | Error::InvalidGrid { .. } => true,
            _ => false,
        }
    }
}
