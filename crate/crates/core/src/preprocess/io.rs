//! On-disk formats: PNG frame directories with `metadata.toml`, processed
//! sequences as raw little-endian f64 plus `manifest.json`, and alignment
//! CSV.

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{AlignmentTrack, Frame, FrameSequence, ProcessedSequence};

pub const METADATA_FILE: &str = "metadata.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATA_FILE: &str = "frames.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameMetadata {
    pub dt: f64,
    #[serde(default)]
    pub t0: f64,
    pub f0_estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<[usize; 2]>,
}

/// Decodes an image to [0, 1]; colour images contribute their green
/// channel.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path)?;
    let (cols, rows) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA16(b) => b.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        DynamicImage::ImageRgb16(b) => b.pixels().map(|p| p.0[1] as f64 / 65535.0).collect(),
        DynamicImage::ImageRgba16(b) => b.pixels().map(|p| p.0[1] as f64 / 65535.0).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| p.0[1] as f64 / 255.0)
            .collect(),
    };
    Frame::new(rows, cols, data)
}

/// Writes a 16-bit grayscale PNG, mapping [lo, hi] onto the full range.
pub fn save_frame_png(path: &Path, frame: &Frame, lo: f64, hi: f64) -> Result<()> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(frame.cols as u32, frame.rows as u32, |x, y| {
            let v = ((frame.get(y as usize, x as usize) - lo) / span).clamp(0.0, 1.0);
            Luma([(v * 65535.0).round() as u16])
        });
    buf.save(path)?;
    Ok(())
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Reads `metadata.toml` and every PNG in `dir` in file-name order.
pub fn load_sequence(dir: &Path) -> Result<FrameSequence> {
    let meta_path = dir.join(METADATA_FILE);
    let text = fs::read_to_string(&meta_path)?;
    let meta: FrameMetadata = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    let files = frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::Format(format!("no PNG frames in {}", dir.display())));
    }
    let frames = files
        .iter()
        .map(|p| load_frame(p))
        .collect::<Result<Vec<_>>>()?;
    let seq = FrameSequence {
        frames,
        dt: meta.dt,
        t0: meta.t0,
        f0_estimate: meta.f0_estimate,
        center: meta.center.map(|c| (c[0], c[1])),
        radii: meta.radii.map(|r| (r[0], r[1])),
    };
    seq.validate()?;
    Ok(seq)
}

/// Writes `frame_NNNN.png` files (values in [0, 1]) and `metadata.toml`.
pub fn write_sequence(dir: &Path, seq: &FrameSequence) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, f) in seq.frames.iter().enumerate() {
        save_frame_png(&dir.join(format!("frame_{k:04}.png")), f, 0.0, 1.0)?;
    }
    let meta = FrameMetadata {
        dt: seq.dt,
        t0: seq.t0,
        f0_estimate: seq.f0_estimate,
        center: seq.center.map(|(i, j)| [i, j]),
        radii: seq.radii.map(|(i, j)| [i, j]),
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(METADATA_FILE), text)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ProcessedManifest {
    #[serde(flatten)]
    meta: ProcessedSequence,
    frame_count: usize,
    data: String,
}

pub fn write_processed(dir: &Path, seq: &ProcessedSequence) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut bytes = Vec::with_capacity(seq.frames.len() * seq.n * seq.n * 8);
    for f in &seq.frames {
        if f.len() != seq.n * seq.n {
            return Err(Error::Shape(format!(
                "frame has {} values, expected {}",
                f.len(),
                seq.n * seq.n
            )));
        }
        for v in f {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(dir.join(DATA_FILE), bytes)?;
    let manifest = ProcessedManifest {
        meta: seq.clone(),
        frame_count: seq.frames.len(),
        data: DATA_FILE.into(),
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn read_processed(dir: &Path) -> Result<ProcessedSequence> {
    let manifest: ProcessedManifest =
        serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let bytes = fs::read(dir.join(&manifest.data))?;
    let per = manifest.meta.n * manifest.meta.n;
    if bytes.len() != manifest.frame_count * per * 8 {
        return Err(Error::Format(format!(
            "{} holds {} bytes, manifest implies {}",
            manifest.data,
            bytes.len(),
            manifest.frame_count * per * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut seq = manifest.meta;
    seq.frames = values.chunks(per.max(1)).map(<[f64]>::to_vec).collect();
    seq.frames.truncate(manifest.frame_count);
    Ok(seq)
}

/// Columns: frame, ci, cj, di, dj.
pub fn write_alignment_csv(path: &Path, track: &AlignmentTrack) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame", "ci", "cj", "di", "dj"])?;
    for (k, (c, d)) in track.centers.iter().zip(&track.displacements).enumerate() {
        w.write_record(&[
            k.to_string(),
            c.0.to_string(),
            c.1.to_string(),
            d.0.to_string(),
            d.1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
