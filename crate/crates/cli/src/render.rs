//! Intensity frames from solves, and image/CSV helpers.

use std::fmt::Write as _;
use std::path::Path;

use tearfilm::forward::SolveResult;
use tearfilm::inverse::ModelSpec;
use tearfilm::preprocess::io::save_frame_png;
use tearfilm::preprocess::Frame;
use tearfilm::{intensity, normalization_coefficient, Grid2D, InitialConditions, NondimParams};

use crate::Failure;

/// Linear interpolation in a sorted abscissa, clamped at the ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let k = xs.partition_point(|&v| v < x);
    if k >= xs.len() {
        return ys[ys.len() - 1];
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] * (1.0 - t) + ys[k] * t
}

/// Normalized intensity per output time as n×n frames. Radial profiles are
/// revolved about the origin, streak profiles extruded along y.
pub fn intensity_frames(
    spec: &ModelSpec,
    res: &SolveResult,
    nd: &NondimParams,
    ic: &InitialConditions,
    n: usize,
) -> Result<Vec<Frame>, Failure> {
    let i0 =
        normalization_coefficient(ic.f0, nd.phi).map_err(|e| Failure::Config(e.to_string()))?;
    let grid = Grid2D::square(n).map_err(|e| Failure::Config(e.to_string()))?;
    res.states
        .iter()
        .map(|s| {
            let v = intensity(&s.h, &s.f, i0, nd.phi);
            let data = match spec {
                ModelSpec::Planar(_) => v,
                ModelSpec::Radial(_) => grid.sample(|x, y| interp(&res.x, &v, x.hypot(y))),
                ModelSpec::Streak(_) => grid.sample(|x, _| interp(&res.x, &v, x)),
            };
            let (rows, cols) = match spec {
                ModelSpec::Planar(_) => s.shape,
                _ => (n, n),
            };
            Frame::new(rows, cols, data).map_err(|e| Failure::Solver(e.to_string()))
        })
        .collect()
}

pub fn frame_from(n: usize, data: &[f64]) -> Frame {
    Frame::new(n, n, data.to_vec()).expect("n×n data")
}

/// Model and data side by side with a two-pixel gap, on a shared scale.
pub fn side_by_side(model: &Frame, data: &Frame) -> Frame {
    let gap = 2;
    let (rows, cols) = (model.rows, model.cols + gap + data.cols);
    let lo = model.min().min(data.min());
    let mut out = Frame::filled(rows, cols, lo);
    for i in 0..rows {
        for j in 0..model.cols {
            out.set(i, j, model.get(i, j));
        }
        for j in 0..data.cols {
            out.set(i, model.cols + gap + j, data.get(i, j));
        }
    }
    out
}

/// PNG scaled to the frame's own range.
pub fn save_stretched(path: &Path, frame: &Frame) -> Result<(), Failure> {
    save_frame_png(path, frame, frame.min(), frame.max()).map_err(Failure::io)
}

/// Columns: frame, t, min, mean, max.
pub fn write_summary(path: &Path, times: &[f64], frames: &[Frame]) -> Result<(), Failure> {
    let mut s = String::from("frame,t,min,mean,max\n");
    for (k, (t, f)) in times.iter().zip(frames).enumerate() {
        let _ = writeln!(s, "{k},{t},{},{},{}", f.min(), f.mean(), f.max());
    }
    std::fs::write(path, s).map_err(Failure::io)
}

/// Evenly spaced frame indices, always including the last.
pub fn sample_indices(total: usize, count: usize) -> Vec<usize> {
    if total == 0 || count == 0 {
        return Vec::new();
    }
    if count >= total {
        return (0..total).collect();
    }
    let mut out: Vec<usize> = (0..count)
        .map(|k| {
            if count == 1 {
                total - 1
            } else {
                k * (total - 1) / (count - 1)
            }
        })
        .collect();
    out.dedup();
    out
}
