use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manipulation::{PartLabel, Provenance};

/// One aligned real/fake pair and its part map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub real_path: PathBuf,
    pub fake_path: PathBuf,
    /// Part-label map (`uint8` codes) shared by both clips.
    pub mask_path: PathBuf,
    /// Part to swap; when absent every swappable part is produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<PartLabel>,
    /// The pair was produced from the same source frames, pixel-aligned.
    #[serde(default)]
    pub alignment_attested: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiers: Option<Provenance>,
}

impl ManifestEntry {
    pub fn parts(&self) -> Vec<PartLabel> {
        match self.part {
            Some(p) => vec![p],
            None => PartLabel::SWAPPED.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleManifest {
    pub entries: Vec<ManifestEntry>,
}

impl SampleManifest {
    /// Parses a manifest and resolves relative paths against `base`.
    /// Every referenced file must exist.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut m: SampleManifest = serde_json::from_str(text)?;
        for e in &mut m.entries {
            for p in [&mut e.real_path, &mut e.fake_path, &mut e.mask_path] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.is_file() {
                    let err = std::io::Error::new(std::io::ErrorKind::NotFound, "referenced file not found");
                    return Err(Error::from(err).at(p.clone()));
                }
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            Error::Path { .. } => e,
            other => other.at(path),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// A part-swap sample written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapRecord {
    pub video_path: PathBuf,
    pub mask_path: PathBuf,
    pub part: PartLabel,
    pub real_path: PathBuf,
    pub fake_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identifiers: Option<Provenance>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapManifest {
    pub samples: Vec<SwapRecord>,
    /// `(entry index, part, reason)` for every skipped combination.
    pub skipped: Vec<(usize, PartLabel, String)>,
}
