use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Frame;

/// Window centres chained backwards from the last frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentTrack {
    /// (row, col) per frame.
    pub centers: Vec<(usize, usize)>,
    /// Accepted shift from frame k+1 to frame k; the last entry is (0, 0).
    pub displacements: Vec<(i64, i64)>,
    pub radii: (usize, usize),
    pub search_radius: usize,
}

/// Fraction of the unshifted mismatch a shift must beat to be accepted.
const ACCEPT_RATIO: f64 = 0.95;

fn check_fit(
    frame: &Frame,
    k: usize,
    c: (usize, usize),
    r: (usize, usize),
    s: usize,
) -> Result<()> {
    let reach_i = r.0 + s;
    let reach_j = r.1 + s;
    if c.0 < reach_i || c.1 < reach_j || c.0 + reach_i >= frame.rows || c.1 + reach_j >= frame.cols
    {
        return Err(Error::Alignment {
            frame: k,
            reason: format!(
                "window at ({}, {}) with radii ({}, {}) and search radius {s} leaves the {}x{} frame",
                c.0, c.1, r.0, r.1, frame.rows, frame.cols
            ),
        });
    }
    Ok(())
}

fn mismatch(reference: &Frame, frame: &Frame, ci: usize, cj: usize) -> f64 {
    let (ri, rj) = (reference.rows / 2, reference.cols / 2);
    let mut sum = 0.0;
    for a in 0..reference.rows {
        let row = &frame.data[(ci - ri + a) * frame.cols + cj - rj..][..reference.cols];
        let rref = &reference.data[a * reference.cols..][..reference.cols];
        for (x, y) in rref.iter().zip(row) {
            let d = x - y;
            sum += d * d;
        }
    }
    sum.sqrt()
}

/// Tracks a window of half-sizes `radii` from `last_center` in the final
/// frame back to the first, searching shifts in {−s..s}².
pub fn align_frames(
    frames: &[Frame],
    last_center: (usize, usize),
    radii: (usize, usize),
    s: usize,
) -> Result<AlignmentTrack> {
    if s == 0 {
        return Err(crate::error::domain("search_radius", "must be at least 1"));
    }
    let n = frames.len();
    if n == 0 {
        return Err(Error::Shape("no frames to align".into()));
    }
    let mut centers = vec![(0usize, 0usize); n];
    let mut displacements = vec![(0i64, 0i64); n];
    centers[n - 1] = last_center;
    check_fit(&frames[n - 1], n - 1, last_center, radii, s)?;
    let si = s as i64;
    for k in (0..n - 1).rev() {
        let c = centers[k + 1];
        check_fit(&frames[k], k, c, radii, s)?;
        let reference = frames[k + 1].window(c.0, c.1, radii.0, radii.1);
        let stay = mismatch(&reference, &frames[k], c.0, c.1);
        let mut best = (0i64, 0i64);
        let mut best_val = stay;
        for di in -si..=si {
            for dj in -si..=si {
                let ci = (c.0 as i64 + di) as usize;
                let cj = (c.1 as i64 + dj) as usize;
                let v = mismatch(&reference, &frames[k], ci, cj);
                if v < best_val {
                    best_val = v;
                    best = (di, dj);
                }
            }
        }
        if !(best_val < ACCEPT_RATIO * stay) {
            best = (0, 0);
        }
        displacements[k] = best;
        centers[k] = (
            (c.0 as i64 + best.0) as usize,
            (c.1 as i64 + best.1) as usize,
        );
    }
    Ok(AlignmentTrack {
        centers,
        displacements,
        radii,
        search_radius: s,
    })
}
