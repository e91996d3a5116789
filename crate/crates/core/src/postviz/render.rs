use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::blobs::Blob;
use super::ellipse::EllipseOverlay;
use super::palette::VIRIDIS;
use super::semantic::PartRelevance;
use crate::error::{Error, Result};
use crate::manipulation::{PartLabel, PartMask};
use crate::tensor::{Heatmap, Video};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Heatmap opacity over the frame, in `[0, 1]`.
    pub alpha: f64,
    pub colormap: String,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            alpha: 0.5,
            colormap: "viridis".into(),
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig("alpha must lie in [0, 1]".into()));
        }
        colormap(&self.colormap)?;
        Ok(())
    }
}

fn colormap(name: &str) -> Result<&'static [[u8; 3]; 256]> {
    match name {
        "viridis" => Ok(&VIRIDIS),
        other => Err(Error::InvalidConfig(format!("unknown colormap '{other}'"))),
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            rgb: vec![0; width * height * 3],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.rgb[i..i + 3].copy_from_slice(&c);
    }

    fn plot(&mut self, x: f64, y: f64, x_range: (usize, usize), c: [u8; 3]) {
        let (xi, yi) = (x.round(), y.round());
        if xi < x_range.0 as f64 || xi >= x_range.1 as f64 || yi < 0.0 || yi >= self.height as f64 {
            return;
        }
        self.set(xi as usize, yi as usize, c);
    }

    /// PNG bytes. Encoder settings are fixed so output is byte-stable.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            enc.set_compression(png::Compression::Balanced);
            enc.set_filter(png::Filter::NoFilter);
            let mut writer = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
            writer.write_image_data(&self.rgb).map_err(|e| Error::Png(e.to_string()))?;
        }
        Ok(out)
    }

    /// Frame `index` of a strip of `cols`-wide frames.
    pub fn tile(&self, index: usize, cols: usize) -> Raster {
        let mut out = Raster::new(cols, self.height);
        for y in 0..self.height {
            let src = (y * self.width + index * cols) * 3;
            out.rgb[y * cols * 3..(y + 1) * cols * 3].copy_from_slice(&self.rgb[src..src + cols * 3]);
        }
        out
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_png()?).map_err(|e| Error::from(e).at(path))
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let dec = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
        let size = reader.output_buffer_size().ok_or_else(|| Error::Png("image too large".into()))?;
        let mut buf = vec![0; size];
        let info = reader.next_frame(&mut buf).map_err(|e| Error::Png(e.to_string()))?;
        if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Png("expected 8-bit RGB".into()));
        }
        buf.truncate(info.buffer_size());
        Ok(Raster {
            width: info.width as usize,
            height: info.height as usize,
            rgb: buf,
        })
    }
}

fn to_byte(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// Heatmap blended over the video, frames laid out left to right. Each
/// frame's heatmap is scaled by its own maximum before colour mapping.
pub fn render_overlay(v: &Video, h: &Heatmap, cfg: &RenderConfig) -> Result<Raster> {
    cfg.validate()?;
    v.grid().check_same(&h.grid())?;
    let cmap = colormap(&cfg.colormap)?;
    let [t, rows, cols] = v.grid().shape();
    let channels = v.channels();
    let mut img = Raster::new(t * cols, rows);
    for f in 0..t {
        let frame = h.data().index_axis(ndarray::Axis(0), f);
        let peak = frame.iter().copied().fold(0.0, f64::max);
        for u in 0..rows {
            for w in 0..cols {
                let level = if peak > 0.0 { frame[[u, w]] / peak } else { 0.0 };
                let color = cmap[(level * 255.0).round().clamp(0.0, 255.0) as usize];
                let mut px = [0u8; 3];
                for (k, out) in px.iter_mut().enumerate() {
                    let x = v.data()[[f, u, w, if channels == 1 { 0 } else { k }]];
                    *out = to_byte((1.0 - cfg.alpha) * x * 255.0 + cfg.alpha * color[k] as f64);
                }
                img.set(f * cols + w, u, px);
            }
        }
    }
    Ok(img)
}

pub const ELLIPSE_COLOR: [u8; 3] = [255, 255, 255];
pub const BLOB_COLOR: [u8; 3] = [230, 30, 30];

/// Outlines each ellipse in its frame's tile of a strip of `cols`-wide frames.
pub fn draw_ellipses(img: &mut Raster, cols: usize, ellipses: &[EllipseOverlay]) {
    for e in ellipses {
        let x0 = e.frame * cols;
        let (s, c) = e.orientation.sin_cos();
        let steps = outline_steps(e.axes[0]);
        for i in 0..steps {
            let phi = 2.0 * PI * i as f64 / steps as f64;
            let (a, b) = (e.axes[0] * phi.cos(), e.axes[1] * phi.sin());
            let x = e.center[1] + a * c - b * s;
            let y = e.center[0] + a * s + b * c;
            img.plot(x0 as f64 + x, y, (x0, x0 + cols), ELLIPSE_COLOR);
        }
    }
}

/// Circles of radius `sqrt(2) * scale` around each blob.
pub fn draw_blobs(img: &mut Raster, cols: usize, blobs: &[Blob]) {
    for b in blobs {
        let x0 = b.frame * cols;
        let r = std::f64::consts::SQRT_2 * b.scale;
        let steps = outline_steps(r);
        for i in 0..steps {
            let phi = 2.0 * PI * i as f64 / steps as f64;
            let x = b.center[1] as f64 + r * phi.cos();
            let y = b.center[0] as f64 + r * phi.sin();
            img.plot(x0 as f64 + x, y, (x0, x0 + cols), BLOB_COLOR);
        }
    }
}

fn outline_steps(radius: f64) -> usize {
    ((8.0 * radius).ceil() as usize).max(16)
}

pub fn part_color(p: PartLabel) -> [u8; 3] {
    match p {
        PartLabel::Background => [0, 0, 0],
        PartLabel::Face => [200, 170, 140],
        PartLabel::Nose => [230, 120, 40],
        PartLabel::Mouth => [200, 30, 60],
        PartLabel::Eyes => [40, 110, 220],
        PartLabel::Ears => [90, 180, 80],
    }
}

/// Label map rendered with a fixed colour per part.
pub fn render_parts(parts: &PartMask) -> Raster {
    let [t, rows, cols] = parts.grid().shape();
    let mut img = Raster::new(t * cols, rows);
    for ((f, u, w), &p) in parts.labels().indexed_iter() {
        img.set(f * cols + w, u, part_color(p));
    }
    img
}

/// Each pixel tinted with its part's colour, at an opacity of
/// `cfg.alpha` scaled by the part's mass relative to the heaviest part.
pub fn render_semantic(v: &Video, parts: &PartMask, relevance: &PartRelevance, cfg: &RenderConfig) -> Result<Raster> {
    cfg.validate()?;
    v.grid().check_same(&parts.grid())?;
    let [_, rows, cols] = v.grid().shape();
    let channels = v.channels();
    let peak = relevance.mass.values().copied().fold(0.0, f64::max);
    let mut img = Raster::new(v.grid().frames() * cols, rows);
    for ((f, u, w), &p) in parts.labels().indexed_iter() {
        let share = if peak > 0.0 { relevance.mass[&p] / peak } else { 0.0 };
        let a = cfg.alpha * share;
        let color = part_color(p);
        let mut px = [0u8; 3];
        for (k, out) in px.iter_mut().enumerate() {
            let x = v.data()[[f, u, w, if channels == 1 { 0 } else { k }]];
            *out = to_byte((1.0 - a) * x * 255.0 + a * color[k] as f64);
        }
        img.set(f * cols + w, u, px);
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{face_layout, random_video};
    use crate::tensor::Grid;
    use ndarray::Array4;

    #[test]
    fn zero_alpha_shows_the_frame() {
        let g = Grid::new(2, 5, 6).unwrap();
        let v = random_video(g, 3, 1).unwrap();
        let cfg = RenderConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let img = render_overlay(&v, &Heatmap::uniform(g), &cfg).unwrap();
        assert_eq!((img.width, img.height), (12, 5));
        for ((f, u, w, c), &x) in v.data().indexed_iter() {
            assert_eq!(img.get(f * 6 + w, u)[c], (x * 255.0).round() as u8);
        }
    }

    #[test]
    fn full_alpha_uniform_is_top_of_colormap() {
        let g = Grid::new(1, 3, 3).unwrap();
        let v = Video::zeros(g, 1).unwrap();
        let cfg = RenderConfig {
            alpha: 1.0,
            ..Default::default()
        };
        let img = render_overlay(&v, &Heatmap::uniform(g), &cfg).unwrap();
        assert!(img.rgb.chunks(3).all(|p| p == VIRIDIS[255]));
        let h = Heatmap::one_hot(g, [0, 1, 1]).unwrap();
        let img = render_overlay(&v, &h, &cfg).unwrap();
        assert_eq!(img.get(1, 1), VIRIDIS[255]);
        assert_eq!(img.get(0, 0), VIRIDIS[0]);
    }

    #[test]
    fn grey_video_is_replicated() {
        let g = Grid::new(1, 2, 2).unwrap();
        let v = Video::new(Array4::from_elem((1, 2, 2, 1), 0.5)).unwrap();
        let cfg = RenderConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let img = render_overlay(&v, &Heatmap::uniform(g), &cfg).unwrap();
        assert!(img.rgb.iter().all(|&b| b == 128));
    }

    #[test]
    fn unknown_colormap_rejected() {
        let g = Grid::new(1, 2, 2).unwrap();
        let cfg = RenderConfig {
            alpha: 0.5,
            colormap: "jet".into(),
        };
        assert!(render_overlay(&Video::zeros(g, 3).unwrap(), &Heatmap::uniform(g), &cfg).is_err());
    }

    #[test]
    fn tiles_split_the_strip() {
        let g = Grid::new(3, 4, 5).unwrap();
        let v = random_video(g, 3, 2).unwrap();
        let strip = render_overlay(&v, &Heatmap::uniform(g), &RenderConfig::default()).unwrap();
        let t = strip.tile(2, 5);
        assert_eq!((t.width, t.height), (5, 4));
        assert_eq!(t.get(4, 3), strip.get(14, 3));
    }

    #[test]
    fn semantic_tint_follows_relevance() {
        let g = Grid::new(1, 16, 16).unwrap();
        let parts = face_layout(g);
        let v = Video::zeros(g, 3).unwrap();
        let h = Heatmap::one_hot(g, [0, 5, 7]).unwrap();
        let rel = PartRelevance::compute(&h, &parts).unwrap();
        let cfg = RenderConfig {
            alpha: 1.0,
            ..Default::default()
        };
        let img = render_semantic(&v, &parts, &rel, &cfg).unwrap();
        assert_eq!(img.get(7, 5), part_color(PartLabel::Eyes));
        // parts without relevance keep the (black) frame
        assert_eq!(img.get(7, 11), [0, 0, 0]);
    }

    #[test]
    fn png_round_trip() {
        let parts = face_layout(Grid::new(2, 8, 8).unwrap());
        let img = render_parts(&parts);
        let bytes = img.to_png().unwrap();
        assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
        assert_eq!(Raster::from_png(&bytes).unwrap(), img);
        assert_eq!(img.to_png().unwrap(), bytes);
    }

    #[test]
    fn ellipse_outline_stays_in_its_tile() {
        let mut img = Raster::new(20, 10);
        let e = EllipseOverlay {
            frame: 1,
            center: [5.0, 2.0],
            variances: [16.0, 1.0],
            axes: [8.0, 2.0],
            orientation: 0.0,
            mass: 1.0,
        };
        draw_ellipses(&mut img, 10, &[e]);
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(img.get(x, y), [0, 0, 0]);
            }
        }
        assert_eq!(img.get(12, 7), ELLIPSE_COLOR);
    }
}
