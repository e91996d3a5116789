use std::path::{Path, PathBuf};

use heatmetrics::explain::{deletion_score, explain as run_method, Baseline, IntegratedGradConfig, SmoothGradConfig};
use heatmetrics::io::{
    heatmap_to_array, load_binary_mask, load_heatmap, load_part_mask, load_video, npy, read_array, video_from_array, video_to_array,
    ArrayData, MetricsReport, MetricsRow, SampleManifest, SwapManifest, SwapRecord,
};
use heatmetrics::manipulation::{mass_inside, part_swap, precision_at_k, PartLabel};
use heatmetrics::metrics::QualityScores;
use heatmetrics::postviz::{
    detect_blobs, draw_blobs, draw_ellipses, enhance, gaussian_match, render_overlay, render_semantic, BlobSet, EllipseOverlay,
    PartRelevance,
};
use heatmetrics::tensor::normalize_attribution;
use heatmetrics::{Error, Heatmap, Video, TOOL_VERSION};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::failure::{Failure, Failures};
use crate::output::{derived_paths, emit, ensure_dir, par_map, stem, write_atomic};
use crate::Mode;

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("records always serialize") + "\n"
}

pub fn metrics(
    cfg: &RunConfig,
    heatmaps: &[PathBuf],
    masks: &[PathBuf],
    method: Option<String>,
    output: Option<&Path>,
) -> Result<(), Failures> {
    if !(masks.is_empty() || masks.len() == 1 || masks.len() == heatmaps.len()) {
        return Err(Failure::input(format!(
            "got {} masks for {} heatmaps: give one per heatmap or a single shared mask",
            masks.len(),
            heatmaps.len()
        ))
        .into());
    }
    let rows = par_map(cfg.jobs, heatmaps, |i, path| {
        let h = load_heatmap(path, cfg.metrics.normalize)?;
        let mut row = MetricsRow::new(path.display().to_string(), method.clone(), &QualityScores::compute(&h));
        let mask_path = match masks.len() {
            0 => None,
            1 => Some(&masks[0]),
            _ => Some(&masks[i]),
        };
        if let Some(mp) = mask_path {
            let mask = load_binary_mask(mp)?;
            let inside = |e: Error| Failure::from(e).about(path);
            row.m_in = Some(mass_inside(&h, &mask).map_err(inside)?);
            row.p_100 = Some(precision_at_k(&h, &mask, cfg.metrics.k).map_err(inside)?);
        }
        Ok(row)
    })?;
    let report = MetricsReport::new(rows, cfg.hash());
    let text = match cfg.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv()?,
    };
    emit(output, &text)?;
    Ok(())
}

pub fn partswap(cfg: &RunConfig, manifest_path: &Path, out_dir: &Path, parts: &[PartLabel]) -> Result<(), Failures> {
    let manifest = SampleManifest::load(manifest_path)?;
    let unattested: Vec<Failure> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.alignment_attested)
        .map(|(i, e)| Failure::input(format!("entry {i} ({}): alignment is not attested", e.fake_path.display())))
        .collect();
    if !unattested.is_empty() && !cfg.partswap.allow_unattested {
        return Err(Failures(unattested));
    }
    ensure_dir(out_dir)?;

    type EntryResult = (Vec<SwapRecord>, Vec<(usize, PartLabel, String)>);
    let per_entry = par_map(cfg.jobs, &manifest.entries, |i, entry| -> Result<EntryResult, Failure> {
        let real = load_video(&entry.real_path)?;
        let fake_raw = read_array(&entry.fake_path)?;
        let dtype = fake_raw.dtype();
        let fake = video_from_array(&fake_raw).map_err(|e| Failure::from(e).about(&entry.fake_path))?;
        let labels = load_part_mask(&entry.mask_path)?;
        let name = match &entry.identifiers {
            Some(ids) => format!("{i:04}_{}", ids.fake_id),
            None => format!("{i:04}_{}", stem(&entry.fake_path)),
        };
        let wanted = if parts.is_empty() { entry.parts() } else { parts.to_vec() };
        let mut records = Vec::new();
        let mut skipped = Vec::new();
        for part in wanted {
            let mut sample = match part_swap(&real, &fake, &labels, part) {
                Ok(s) => s,
                Err(e @ Error::EmptyPart(_)) => {
                    skipped.push((i, part, e.to_string()));
                    continue;
                }
                Err(e) => return Err(Failure::from(e).about(&entry.fake_path)),
            };
            sample.provenance = entry.identifiers.clone();
            let video_path = out_dir.join(format!("{name}_{part}.npy"));
            let mask_path = out_dir.join(format!("{name}_{part}_mask.npy"));
            write_atomic(&video_path, &npy::encode(&video_to_array(&sample.video, dtype))?)?;
            let mask = ArrayData::U8(sample.mask.to_u8().into_dyn());
            write_atomic(&mask_path, &npy::encode(&mask)?)?;
            records.push(SwapRecord {
                video_path,
                mask_path,
                part,
                real_path: entry.real_path.clone(),
                fake_path: entry.fake_path.clone(),
                identifiers: entry.identifiers.clone(),
            });
        }
        Ok((records, skipped))
    })?;

    let mut out = SwapManifest::default();
    for (records, skipped) in per_entry {
        out.samples.extend(records);
        out.skipped.extend(skipped);
    }
    for (i, part, why) in &out.skipped {
        eprintln!("warning: entry {i}, part {part}: skipped ({why})");
    }
    if !out.skipped.is_empty() {
        eprintln!("warning: {} part swap(s) skipped", out.skipped.len());
    }
    write_atomic(&out_dir.join("swaps.json"), to_json(&out).as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct ExplainRecord {
    video: PathBuf,
    heatmap: PathBuf,
    seed: u64,
}

#[derive(Serialize)]
struct ExplainLog<'a> {
    tool_version: &'a str,
    config_hash: String,
    method: &'a str,
    classifier: &'a crate::config::ClassifierSpec,
    samples: Vec<ExplainRecord>,
}

pub fn explain(cfg: &RunConfig, videos: &[PathBuf], out_dir: &Path) -> Result<(), Failures> {
    let outputs = derived_paths(out_dir, videos, ".npy")?;
    ensure_dir(out_dir)?;
    let baseline = match &cfg.intgrad.baseline {
        Some(p) => Baseline::Video(load_video(p)?),
        None => Baseline::Black,
    };
    let integrated = IntegratedGradConfig {
        steps: cfg.intgrad.steps,
        baseline,
    };
    let records = par_map(cfg.jobs, videos, |i, path| {
        let v = load_video(path)?;
        let [t, h, w] = v.grid().shape();
        let f = cfg.classifier.build([t, h, w, v.channels()])?;
        // every clip gets its own noise stream, recorded in the log
        let seed = cfg.seed.wrapping_add(i as u64);
        let smooth = SmoothGradConfig {
            samples: cfg.smoothgrad.samples,
            noise_scale: cfg.smoothgrad.noise_scale,
            seed,
        };
        let raw = run_method(cfg.method, &*f, &v, &smooth, &integrated).map_err(|e| Failure::from(e).about(path))?;
        let heat = normalize_attribution(&raw).map_err(|e| Failure::from(e).about(path))?;
        write_atomic(&outputs[i], &npy::encode(&heatmap_to_array(&heat))?)?;
        Ok(ExplainRecord {
            video: path.clone(),
            heatmap: outputs[i].clone(),
            seed,
        })
    })?;
    let log = ExplainLog {
        tool_version: TOOL_VERSION,
        config_hash: cfg.hash(),
        method: cfg.method.name(),
        classifier: &cfg.classifier,
        samples: records,
    };
    write_atomic(&out_dir.join("explain.json"), to_json(&log).as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct DeletionRecord<'a> {
    tool_version: &'a str,
    config_hash: String,
    video: &'a Path,
    heatmap: &'a Path,
    bins: usize,
    score: f64,
    alphas: Vec<f64>,
    confidences: Vec<f64>,
}

pub fn deletion(cfg: &RunConfig, video: &Path, heatmap: &Path, output: Option<&Path>) -> Result<(), Failures> {
    let v = load_video(video)?;
    let h = load_heatmap(heatmap, cfg.metrics.normalize)?;
    if v.grid() != h.grid() {
        return Err(Failure::input(format!(
            "{}: heatmap grid {:?} does not match the clip grid {:?}",
            heatmap.display(),
            h.grid().shape(),
            v.grid().shape()
        ))
        .into());
    }
    let [t, rows, cols] = v.grid().shape();
    let f = cfg.classifier.build([t, rows, cols, v.channels()])?;
    let curve = deletion_score(&*f, &v, &h, cfg.deletion.bins).map_err(|e| Failure::from(e).about(heatmap))?;
    let record = DeletionRecord {
        tool_version: TOOL_VERSION,
        config_hash: cfg.hash(),
        video,
        heatmap,
        bins: cfg.deletion.bins,
        score: curve.score,
        alphas: curve.alphas,
        confidences: curve.confidences,
    };
    emit(output, &to_json(&record))?;
    Ok(())
}

#[derive(Serialize)]
struct VisualizeLog {
    tool_version: &'static str,
    config_hash: String,
    files: Vec<PathBuf>,
    ellipses: Option<Vec<EllipseOverlay>>,
    blobs: Option<BlobSet>,
    parts: Option<PartRelevance>,
}

pub fn visualize(
    cfg: &RunConfig,
    video: &Path,
    heatmap: &Path,
    mask: Option<&Path>,
    modes: &[Mode],
    frames: &[usize],
    out_dir: &Path,
) -> Result<(), Failures> {
    let modes: Vec<Mode> = if modes.is_empty() {
        let mut all = vec![Mode::Enhanced, Mode::Gaussian, Mode::Blobs];
        if mask.is_some() {
            all.push(Mode::Semantic);
        }
        all
    } else {
        modes.to_vec()
    };
    if modes.contains(&Mode::Semantic) && mask.is_none() {
        return Err(Failure::input("semantic mode needs a part map (--mask)").into());
    }
    let v: Video = load_video(video)?;
    let h: Heatmap = load_heatmap(heatmap, cfg.metrics.normalize)?;
    if v.grid() != h.grid() {
        return Err(Failure::input(format!(
            "{}: heatmap grid {:?} does not match the clip grid {:?}",
            heatmap.display(),
            h.grid().shape(),
            v.grid().shape()
        ))
        .into());
    }
    let [t, _, cols] = v.grid().shape();
    let frames: Vec<usize> = if frames.is_empty() { (0..t).collect() } else { frames.to_vec() };
    if let Some(&bad) = frames.iter().find(|&&f| f >= t) {
        return Err(Failure::input(format!("frame {bad} is out of range: the clip has {t} frames (0..={})", t - 1)).into());
    }
    ensure_dir(out_dir)?;

    let mut log = VisualizeLog {
        tool_version: TOOL_VERSION,
        config_hash: cfg.hash(),
        files: Vec::new(),
        ellipses: None,
        blobs: None,
        parts: None,
    };
    let mut strips = Vec::new();
    for &mode in &modes {
        let strip = match mode {
            Mode::Enhanced => render_overlay(&v, &enhance(&h, &cfg.enhance)?, &cfg.render)?,
            Mode::Gaussian => {
                let ellipses = gaussian_match(&h, cfg.ellipse.axis_scale);
                let mut img = render_overlay(&v, &h, &cfg.render)?;
                draw_ellipses(&mut img, cols, &ellipses);
                log.ellipses = Some(ellipses);
                img
            }
            Mode::Blobs => {
                let blobs = detect_blobs(&h, &cfg.blobs)?;
                let mut img = render_overlay(&v, &h, &cfg.render)?;
                draw_blobs(&mut img, cols, &blobs.blobs);
                log.blobs = Some(blobs);
                img
            }
            Mode::Semantic => {
                let mask_path = mask.expect("checked above");
                let parts = load_part_mask(mask_path)?;
                let rel = PartRelevance::compute(&h, &parts).map_err(|e| Failure::from(e).about(mask_path))?;
                let img = render_semantic(&v, &parts, &rel, &cfg.render)?;
                log.parts = Some(rel);
                img
            }
        };
        strips.push((mode, strip));
    }
    let jobs: Vec<(Mode, usize)> = modes.iter().flat_map(|&m| frames.iter().map(move |&f| (m, f))).collect();
    let files = par_map(cfg.jobs, &jobs, |_, &(mode, f)| {
        let strip = &strips.iter().find(|(m, _)| *m == mode).expect("rendered above").1;
        let path = out_dir.join(format!("{}_{f:04}.png", mode.name()));
        write_atomic(&path, &strip.tile(f, cols).to_png()?)?;
        Ok(path)
    })?;
    log.files = files;
    write_atomic(&out_dir.join("visualize.json"), to_json(&log).as_bytes())?;
    Ok(())
}

