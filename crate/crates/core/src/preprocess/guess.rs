use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaporation::EllipticPeak;
use crate::grid::Grid2D;

/// Values used for the amplitude parameters, and for everything when the
/// frame has no dark region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuessDefaults {
    pub v_b: f64,
    pub a: f64,
    pub beta: f64,
    pub fx: f64,
    pub fy: f64,
    pub e: f64,
    /// Dark-region cut as a fraction of pixels.
    pub percentile: f64,
}

impl Default for GuessDefaults {
    fn default() -> Self {
        Self {
            v_b: 0.05,
            a: 0.6,
            beta: 1.0,
            fx: 0.3,
            fy: 0.3,
            e: 0.5,
            percentile: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialGuess {
    pub v_b: f64,
    pub peak: EllipticPeak,
    pub warnings: Vec<String>,
}

const E_MIN: f64 = 0.01;
const E_MAX: f64 = 0.95;

/// Seeds an ellipse from the darkest pixels of a frame on `grid`:
/// centroid → centre, second moments → axes, eccentricity and focal
/// direction.
pub fn initial_guess_from_final_frame(
    frame: &[f64],
    grid: &Grid2D,
    d: &GuessDefaults,
) -> Result<InitialGuess> {
    if frame.len() != grid.len() {
        return Err(Error::Shape(format!(
            "frame has {} values, grid has {}",
            frame.len(),
            grid.len()
        )));
    }
    let fallback = |why: &str| InitialGuess {
        v_b: d.v_b,
        peak: EllipticPeak {
            x0: 0.0,
            y0: 0.0,
            fx: d.fx,
            fy: d.fy,
            e: d.e,
            a: d.a,
            beta: d.beta,
        },
        warnings: vec![format!("no dark region ({why}); using default spot")],
    };
    let mut sorted: Vec<f64> = frame.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Ok(fallback("no finite pixels"));
    }
    sorted.sort_by(f64::total_cmp);
    let cut = ((sorted.len() - 1) as f64 * d.percentile.clamp(0.0, 1.0)).round() as usize;
    let threshold = sorted[cut];

    // depth-weighted moments of the pixels strictly below the cut
    let (mut w, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let mut pts = Vec::new();
    for i in 0..grid.ny {
        for j in 0..grid.nx {
            let v = frame[grid.index(i, j)];
            if v < threshold {
                let wt = threshold - v;
                let (x, y) = (grid.x(j), grid.y(i));
                w += wt;
                sx += wt * x;
                sy += wt * y;
                pts.push((x, y, wt));
            }
        }
    }
    if pts.len() < 3 || w <= 0.0 {
        return Ok(fallback("fewer than three pixels below the percentile cut"));
    }
    let (cx, cy) = (sx / w, sy / w);
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for &(x, y, wt) in &pts {
        let (dx, dy) = (x - cx, y - cy);
        cxx += wt * dx * dx;
        cxy += wt * dx * dy;
        cyy += wt * dy * dy;
    }
    cxx /= w;
    cxy /= w;
    cyy /= w;
    let mean = 0.5 * (cxx + cyy);
    let spread = (0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy).sqrt();
    let (l1, l2) = (mean + spread, (mean - spread).max(0.0));
    if l1 <= 0.0 {
        return Ok(fallback("dark region is a single point"));
    }
    let theta = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
    let mut warnings = Vec::new();
    let raw_e = (1.0 - l2 / l1).sqrt();
    let e = raw_e.clamp(E_MIN, E_MAX);
    if e != raw_e {
        warnings.push(format!("eccentricity {raw_e:.3} clamped to {e:.3}"));
    }
    let c = l1.sqrt() * e;
    Ok(InitialGuess {
        v_b: d.v_b,
        peak: EllipticPeak {
            x0: cx,
            y0: cy,
            fx: c * theta.cos(),
            fy: c * theta.sin(),
            e,
            a: d.a,
            beta: d.beta,
        },
        warnings,
    })
}
