//! Image-sequence preparation: backward dark-spot alignment, smoothing,
//! periodic windowing, normalization and regridding onto the model grid.

mod align;
mod filter;
mod guess;
pub mod io;
mod regrid;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use align::{align_frames, AlignmentTrack};
pub use filter::{gaussian_smooth, periodic_window, window_weight, WindowParams};
pub use guess::{initial_guess_from_final_frame, GuessDefaults, InitialGuess};
pub use regrid::{bicubic_regrid, normalize_and_regrid};

/// A 2D intensity array, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Frame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "frame of {rows}x{cols} cannot hold {} values",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Inclusive sub-window [ci − ri, ci + ri] × [cj − rj, cj + rj].
    /// Callers check bounds.
    pub fn window(&self, ci: usize, cj: usize, ri: usize, rj: usize) -> Frame {
        let rows = 2 * ri + 1;
        let cols = 2 * rj + 1;
        let mut data = Vec::with_capacity(rows * cols);
        for i in ci - ri..=ci + ri {
            data.extend_from_slice(&self.data[i * self.cols + cj - rj..=i * self.cols + cj + rj]);
        }
        Frame { rows, cols, data }
    }
}

/// Raw frames as decoded from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Frame>,
    /// Frame interval in seconds.
    pub dt: f64,
    pub t0: f64,
    pub f0_estimate: f64,
    /// Optional dark-spot centre (row, col) in the last frame.
    pub center: Option<(usize, usize)>,
    /// Optional window half-sizes (rows, cols).
    pub radii: Option<(usize, usize)>,
}

impl FrameSequence {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .frames
            .first()
            .ok_or_else(|| Error::Shape("sequence has no frames".into()))?;
        if let Some(k) = self
            .frames
            .iter()
            .position(|f| f.rows != first.rows || f.cols != first.cols)
        {
            return Err(Error::Shape(format!(
                "frame {k} is {}x{}, expected {}x{}",
                self.frames[k].rows, self.frames[k].cols, first.rows, first.cols
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(crate::error::domain(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        Ok(())
    }
}

/// Frames on the n×n model grid, normalized so the first frame peaks at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSequence {
    pub n: usize,
    pub dt: f64,
    pub t0: f64,
    pub f0_estimate: f64,
    pub sigma: f64,
    pub window: WindowParams,
    /// Divisor applied during normalization.
    pub scale: f64,
    #[serde(skip)]
    pub frames: Vec<Vec<f64>>,
}

impl ProcessedSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frame times in seconds since the first frame.
    pub fn elapsed_seconds(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Keeps every frame whose index is in `keep`.
    pub fn select(&self, keep: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.frames = keep
            .iter()
            .map(|&k| {
                self.frames
                    .get(k)
                    .cloned()
                    .ok_or_else(|| Error::Shape(format!("frame {k} out of range")))
            })
            .collect::<Result<_>>()?;
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    pub search_radius: usize,
    pub sigma: f64,
    pub window: WindowParams,
    pub grid: usize,
    /// Overrides the sequence's centre.
    pub center: Option<(usize, usize)>,
    /// Overrides the sequence's radii.
    pub radii: Option<(usize, usize)>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            search_radius: 5,
            sigma: 2.0,
            window: WindowParams::default(),
            grid: 40,
            center: None,
            radii: None,
        }
    }
}

/// Runs align → smooth → window-blend → normalize → regrid.
pub fn preprocess(
    seq: &FrameSequence,
    opts: &PreprocessOptions,
) -> Result<(ProcessedSequence, AlignmentTrack)> {
    seq.validate()?;
    let last = seq.frames.last().expect("validated non-empty");
    let s = opts.search_radius;
    let radii = opts
        .radii
        .or(seq.radii)
        .unwrap_or_else(|| default_radii(last.rows, last.cols, s));
    let center = match opts.center.or(seq.center) {
        Some(c) => c,
        None => darkest_point(&gaussian_smooth(last, opts.sigma)?, radii, s),
    };
    let track = align_frames(&seq.frames, center, radii, s)?;
    let windowed = seq
        .frames
        .iter()
        .zip(&track.centers)
        .map(|(frame, &(ci, cj))| {
            let smooth = gaussian_smooth(frame, opts.sigma)?;
            Ok(periodic_window(
                &smooth.window(ci, cj, radii.0, radii.1),
                &opts.window,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (frames, scale) = normalize_and_regrid(&windowed, opts.grid)?;
    let out = ProcessedSequence {
        n: opts.grid,
        dt: seq.dt,
        t0: seq.t0,
        f0_estimate: seq.f0_estimate,
        sigma: opts.sigma,
        window: opts.window,
        scale,
        frames,
    };
    Ok((out, track))
}

fn default_radii(rows: usize, cols: usize, s: usize) -> (usize, usize) {
    let r = rows.min(cols) / 4;
    let cap = |n: usize| (n.saturating_sub(2 * s + 1) / 2).max(1);
    (r.min(cap(rows)).max(1), r.min(cap(cols)).max(1))
}

/// Minimum of `frame` restricted to centres whose search windows fit.
fn darkest_point(frame: &Frame, (ri, rj): (usize, usize), s: usize) -> (usize, usize) {
    let (mi, mj) = (ri + s, rj + s);
    let mut best = (frame.rows / 2, frame.cols / 2);
    let mut lowest = f64::INFINITY;
    if frame.rows <= 2 * mi || frame.cols <= 2 * mj {
        return best;
    }
    for i in mi..frame.rows - mi {
        for j in mj..frame.cols - mj {
            let v = frame.get(i, j);
            if v < lowest {
                lowest = v;
                best = (i, j);
            }
        }
    }
    best
}
