//! Run configuration: TOML file, then environment, then flags.

use std::path::{Path, PathBuf};

use heatmetrics::explain::{
    ConstantClassifier, DifferentiableClassifier, LinearClassifier, MaskedMeanClassifier, Method, QuadraticClassifier, Squash,
    DEFAULT_BINS,
};
use heatmetrics::io::load_binary_mask;
use heatmetrics::io::load_part_mask;
use heatmetrics::manipulation::{PartLabel, DEFAULT_TOP_K};
use heatmetrics::postviz::{BlobConfig, EnhanceConfig, RenderConfig, DEFAULT_AXIS_SCALE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassifierSpec {
    /// Nonnegative random weights summing to one.
    Linear {
        #[serde(default)]
        seed: u64,
    },
    Quadratic {
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_squash")]
        squash: Squash,
    },
    /// Mean intensity over a region: every nonzero voxel of `mask`, or the
    /// voxels labelled `part` when the mask is a part map.
    MaskedMean {
        mask: PathBuf,
        #[serde(default)]
        part: Option<PartLabel>,
    },
    Constant {
        value: f64,
    },
}

fn default_squash() -> Squash {
    Squash::Logistic
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec::Linear { seed: 0 }
    }
}

impl ClassifierSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierSpec::Linear { .. } => "linear",
            ClassifierSpec::Quadratic { .. } => "quadratic",
            ClassifierSpec::MaskedMean { .. } => "masked-mean",
            ClassifierSpec::Constant { .. } => "constant",
        }
    }

    /// Instantiates the classifier for clips of the given shape.
    pub fn build(&self, shape: [usize; 4]) -> Result<Box<dyn DifferentiableClassifier>, Failure> {
        Ok(match self {
            ClassifierSpec::Linear { seed } => Box::new(LinearClassifier::random(shape, *seed)),
            ClassifierSpec::Quadratic { seed, squash } => Box::new(QuadraticClassifier::random(shape, *seed, *squash)),
            ClassifierSpec::Constant { value } => Box::new(ConstantClassifier(*value)),
            ClassifierSpec::MaskedMean { mask, part } => {
                let region = match part {
                    Some(p) => load_part_mask(mask)?.indicator(*p),
                    None => load_binary_mask(mask)?,
                };
                let [t, h, w, _] = shape;
                if region.grid().shape() != [t, h, w] {
                    return Err(Failure::input(format!(
                        "{}: region grid {:?} does not match the clip grid {:?}",
                        mask.display(),
                        region.grid().shape(),
                        [t, h, w]
                    )));
                }
                Box::new(MaskedMeanClassifier::new(region.data().clone(), shape[3])?)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Pixel budget of the precision metric.
    pub k: usize,
    /// Rescale input heatmaps to unit mass instead of requiring it.
    pub normalize: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            k: DEFAULT_TOP_K,
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothGradSection {
    pub samples: usize,
    pub noise_scale: f64,
}

impl Default for SmoothGradSection {
    fn default() -> Self {
        SmoothGradSection {
            samples: 25,
            noise_scale: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntGradSection {
    pub steps: usize,
    /// Baseline clip; absent means all black.
    pub baseline: Option<PathBuf>,
}

impl Default for IntGradSection {
    fn default() -> Self {
        IntGradSection { steps: 25, baseline: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeletionSection {
    pub bins: usize,
}

impl Default for DeletionSection {
    fn default() -> Self {
        DeletionSection { bins: DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EllipseSection {
    pub axis_scale: f64,
}

impl Default for EllipseSection {
    fn default() -> Self {
        EllipseSection {
            axis_scale: DEFAULT_AXIS_SCALE,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartSwapSection {
    /// Accept manifest entries whose alignment is not attested.
    pub allow_unattested: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; absent means one per available core. Not part of
    /// the config hash since it cannot change any output.
    pub jobs: Option<usize>,
    pub format: Format,
    pub method: Method,
    pub classifier: ClassifierSpec,
    pub metrics: MetricsSection,
    pub smoothgrad: SmoothGradSection,
    pub intgrad: IntGradSection,
    pub deletion: DeletionSection,
    pub partswap: PartSwapSection,
    pub enhance: EnhanceConfig,
    pub ellipse: EllipseSection,
    pub blobs: BlobConfig,
    pub render: RenderConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: None,
            format: Format::Json,
            method: Method::Sensitivity,
            classifier: ClassifierSpec::default(),
            metrics: MetricsSection::default(),
            smoothgrad: SmoothGradSection::default(),
            intgrad: IntGradSection::default(),
            deletion: DeletionSection::default(),
            partswap: PartSwapSection::default(),
            enhance: EnhanceConfig::default(),
            ellipse: EllipseSection::default(),
            blobs: BlobConfig::default(),
            render: RenderConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
    }

    /// Hex SHA-256 of the canonical JSON form, `jobs` excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.jobs = None;
        let json = serde_json::to_string(&canonical).expect("config always serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.jobs == Some(0) {
            return Err(Failure::input("jobs must be at least 1"));
        }
        if self.metrics.k == 0 {
            return Err(Failure::input("metrics.k must be at least 1"));
        }
        if self.deletion.bins == 0 {
            return Err(Failure::input("deletion.bins must be at least 1"));
        }
        if self.intgrad.steps == 0 {
            return Err(Failure::input("intgrad.steps must be at least 1"));
        }
        if !(self.ellipse.axis_scale > 0.0) {
            return Err(Failure::input("ellipse.axis_scale must be positive"));
        }
        self.blobs.validate()?;
        self.render.validate()?;
        Ok(())
    }
}
