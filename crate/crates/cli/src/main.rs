//! `heatmetrics`: metrics, part swaps, explanations, deletion curves and
//! overlays for video heatmaps.
//!
//! Exit codes: 0 success, 1 computation error, 2 input or usage error.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heatmetrics::explain::Method;
use heatmetrics::manipulation::PartLabel;

use config::{ClassifierSpec, Format, RunConfig};
use failure::{Failure, Failures};

#[derive(Parser, Debug)]
#[command(name = "heatmetrics", version, about = "Quality metrics for video heatmap explanations")]
struct Cli {
    /// TOML configuration file. Flags override its values.
    #[arg(long, global = true, env = "HEATMETRICS_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, env = "HEATMETRICS_SEED")]
    seed: Option<u64>,
    /// Worker threads across input files [default: all cores].
    #[arg(long, global = true, env = "HEATMETRICS_JOBS")]
    jobs: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum, env = "HEATMETRICS_FORMAT")]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quality metrics for heatmap files, plus region metrics when masks are given.
    Metrics(MetricsArgs),
    /// Build part-swap samples from a manifest of aligned real/fake pairs.
    Partswap(PartswapArgs),
    /// Explain an analytic classifier on video files.
    Explain(ExplainArgs),
    /// Deletion curve of one heatmap.
    Deletion(DeletionArgs),
    /// Render overlays as PNG files.
    Visualize(VisualizeArgs),
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Heatmap files (`T x H x W` float arrays).
    #[arg(required = true)]
    heatmaps: Vec<PathBuf>,
    /// Region masks (`uint8`, nonzero inside): one per heatmap, or one shared.
    #[arg(long = "mask")]
    masks: Vec<PathBuf>,
    /// Pixel budget of the precision metric.
    #[arg(long)]
    k: Option<usize>,
    /// Rescale heatmaps to unit mass instead of requiring it.
    #[arg(long)]
    normalize: bool,
    /// Method name recorded in each row.
    #[arg(long)]
    method: Option<Method>,
    /// Report path [default: stdout].
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PartswapArgs {
    /// Sample manifest (JSON).
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Parts to swap, overriding the manifest [default: eyes, mouth, nose].
    #[arg(long = "part", value_parser = parse_part)]
    parts: Vec<PartLabel>,
    /// Accept entries without an alignment attestation.
    #[arg(long)]
    allow_unattested: bool,
}

#[derive(Args, Debug)]
struct ClassifierArgs {
    /// Analytic classifier kind; its parameters come from the config file.
    #[arg(long, value_parser = ["linear", "quadratic", "masked-mean", "constant"])]
    classifier: Option<String>,
    /// Region mask for the masked-mean classifier.
    #[arg(long)]
    region: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    #[arg(required = true)]
    videos: Vec<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    method: Option<Method>,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// SmoothGrad sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// SmoothGrad noise std, as a fraction of the intensity range.
    #[arg(long)]
    noise_scale: Option<f64>,
    /// Integrated-gradients steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Integrated-gradients baseline clip [default: black].
    #[arg(long)]
    baseline: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DeletionArgs {
    #[arg(long)]
    video: PathBuf,
    #[arg(long)]
    heatmap: PathBuf,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    normalize: bool,
    /// Curve path [default: stdout].
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Enhanced,
    Gaussian,
    Blobs,
    Semantic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Enhanced => "enhanced",
            Mode::Gaussian => "gaussian",
            Mode::Blobs => "blobs",
            Mode::Semantic => "semantic",
        }
    }
}

#[derive(Args, Debug)]
struct VisualizeArgs {
    #[arg(long)]
    video: PathBuf,
    #[arg(long)]
    heatmap: PathBuf,
    /// Part map (`uint8` codes), needed by the semantic mode.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Modes to render [default: all that the inputs allow].
    #[arg(long = "mode", value_enum)]
    modes: Vec<Mode>,
    /// Frames to render [default: all].
    #[arg(long = "frame")]
    frames: Vec<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_part(s: &str) -> Result<PartLabel, String> {
    s.parse().map_err(|e: heatmetrics::Error| e.to_string())
}

fn apply_classifier(cfg: &mut RunConfig, args: &ClassifierArgs) -> Result<(), Failure> {
    if let Some(kind) = &args.classifier {
        if kind != cfg.classifier.kind() {
            cfg.classifier = match kind.as_str() {
                "linear" => ClassifierSpec::Linear { seed: cfg.seed },
                "quadratic" => ClassifierSpec::Quadratic {
                    seed: cfg.seed,
                    squash: heatmetrics::explain::Squash::Logistic,
                },
                "constant" => ClassifierSpec::Constant { value: 0.5 },
                _ => {
                    let mask = args
                        .region
                        .clone()
                        .ok_or_else(|| Failure::input("the masked-mean classifier needs --region"))?;
                    ClassifierSpec::MaskedMean { mask, part: None }
                }
            };
        }
    }
    if let (Some(region), ClassifierSpec::MaskedMean { mask, .. }) = (&args.region, &mut cfg.classifier) {
        *mask = region.clone();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failures> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    match cli.command {
        Command::Metrics(a) => {
            if let Some(k) = a.k {
                cfg.metrics.k = k;
            }
            cfg.metrics.normalize |= a.normalize;
            if let Some(m) = a.method {
                cfg.method = m;
            }
            cfg.validate()?;
            // the method is only a label here unless given explicitly
            let label = a.method.map(|m| m.name().to_string());
            commands::metrics(&cfg, &a.heatmaps, &a.masks, label, a.output.as_deref())
        }
        Command::Partswap(a) => {
            cfg.partswap.allow_unattested |= a.allow_unattested;
            cfg.validate()?;
            commands::partswap(&cfg, &a.manifest, &a.out_dir, &a.parts)
        }
        Command::Explain(a) => {
            if let Some(m) = a.method {
                cfg.method = m;
            }
            if let Some(n) = a.samples {
                cfg.smoothgrad.samples = n;
            }
            if let Some(x) = a.noise_scale {
                cfg.smoothgrad.noise_scale = x;
            }
            if let Some(s) = a.steps {
                cfg.intgrad.steps = s;
            }
            if a.baseline.is_some() {
                cfg.intgrad.baseline = a.baseline.clone();
            }
            apply_classifier(&mut cfg, &a.classifier)?;
            cfg.validate()?;
            commands::explain(&cfg, &a.videos, &a.out_dir)
        }
        Command::Deletion(a) => {
            if let Some(b) = a.bins {
                cfg.deletion.bins = b;
            }
            cfg.metrics.normalize |= a.normalize;
            apply_classifier(&mut cfg, &a.classifier)?;
            cfg.validate()?;
            commands::deletion(&cfg, &a.video, &a.heatmap, a.output.as_deref())
        }
        Command::Visualize(a) => {
            if let Some(x) = a.alpha {
                cfg.render.alpha = x;
            }
            cfg.metrics.normalize |= a.normalize;
            cfg.validate()?;
            commands::visualize(&cfg, &a.video, &a.heatmap, a.mask.as_deref(), &a.modes, &a.frames, &a.out_dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(fails) => {
            for f in &fails.0 {
                eprintln!("error: {f}");
            }
            ExitCode::from(fails.exit_code().max(1))
        }
    }
}
