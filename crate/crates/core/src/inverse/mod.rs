//! Misfit objectives, derivative-free minimizers and the fitting
//! workflows for planar, radial, streak and multi-spot evaporation.

mod fit;
mod layout;
mod nelder_mead;
mod objective;
mod optim;
mod praxis;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::SolveResult;
use crate::grid::{Grid2D, InitialConditions};
use crate::intensity::{intensity, normalization_coefficient};
use crate::params::{nondim_time, NondimParams};
use crate::preprocess::ProcessedSequence;

pub use fit::{
    fit_multi_spot, fit_planar, fit_radial_to_2d, fit_streak_to_2d, minimize, Algorithm, FitResult,
    FitStatus, LiftedFit, OptimizerOptions, StreakAxis,
};
pub use layout::{Layout, ModelSpec};
pub use nelder_mead::{nelder_mead, NelderMeadOptions};
pub use objective::{ForwardMode, ModelSetup, Objective, DEFAULT_PENALTY};
pub use optim::OptimOutcome;
pub use praxis::{praxis, PraxisOptions};

/// Intensity frames on the n×n model grid at model times.
#[derive(Debug, Clone, PartialEq)]
pub struct FitData {
    pub n: usize,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
}

impl FitData {
    pub fn new(n: usize, times: Vec<f64>, frames: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != frames.len() || frames.is_empty() {
            return Err(Error::Shape(format!(
                "{} times for {} frames",
                times.len(),
                frames.len()
            )));
        }
        if let Some(k) = frames.iter().position(|f| f.len() != n * n) {
            return Err(Error::Shape(format!("frame {k} is not {n}x{n}")));
        }
        Ok(Self { n, times, frames })
    }

    /// Every `stride`-th processed frame, timed from the first one.
    pub fn from_processed(
        seq: &ProcessedSequence,
        nd: &NondimParams,
        stride: usize,
    ) -> Result<Self> {
        let stride = stride.max(1);
        let keep: Vec<usize> = (0..seq.len()).step_by(stride).collect();
        let times = keep
            .iter()
            .map(|&k| nondim_time(k as f64 * seq.dt, nd))
            .collect();
        let frames = keep.iter().map(|&k| seq.frames[k].clone()).collect();
        Self::new(seq.n, times, frames)
    }

    /// Normalized intensity of a planar solve.
    pub fn from_solve(
        result: &SolveResult,
        nd: &NondimParams,
        ic: &InitialConditions,
    ) -> Result<Self> {
        let i0 = normalization_coefficient(ic.f0, nd.phi)?;
        let n = result.x.len();
        if result.y.len() != n {
            return Err(Error::Shape(
                "synthetic data must come from a square planar solve".into(),
            ));
        }
        let frames = result
            .states
            .iter()
            .map(|s| intensity(&s.h, &s.f, i0, nd.phi))
            .collect();
        Self::new(n, result.times.clone(), frames)
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D::square(self.n).expect("validated size")
    }
}

/// Axis-aligned region of (−π, π]² over which misfits are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rectangle {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Rectangle {
    fn default() -> Self {
        Self::centered(2.6)
    }
}

impl Rectangle {
    pub fn centered(half: f64) -> Self {
        Self {
            x_min: -half,
            x_max: half,
            y_min: -half,
            y_max: half,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    /// 0/1 weights on `grid`; fails when no node is inside.
    pub fn mask(&self, grid: &Grid2D) -> Result<Vec<f64>> {
        let w = grid.sample(|x, y| if self.contains(x, y) { 1.0 } else { 0.0 });
        if w.iter().all(|&v| v == 0.0) {
            return Err(Error::Shape(format!(
                "norm rectangle {self:?} holds no grid points"
            )));
        }
        Ok(w)
    }
}

/// ‖I_th − I_ex‖ / ‖I_ex‖ per frame with weighted norms; `None` where the
/// data norm vanishes.
pub fn relative_error_trace(
    model: &[Vec<f64>],
    data: &[Vec<f64>],
    weights: &[f64],
) -> Result<Vec<Option<f64>>> {
    if model.len() != data.len() {
        return Err(Error::Shape(format!(
            "{} model frames vs {} data frames",
            model.len(),
            data.len()
        )));
    }
    model
        .iter()
        .zip(data)
        .enumerate()
        .map(|(k, (m, d))| {
            if m.len() != d.len() || d.len() != weights.len() {
                return Err(Error::Shape(format!(
                    "frame {k}: sizes {} / {} / {}",
                    m.len(),
                    d.len(),
                    weights.len()
                )));
            }
            let (mut num, mut den) = (0.0, 0.0);
            for ((a, b), w) in m.iter().zip(d).zip(weights) {
                num += w * (a - b) * (a - b);
                den += w * b * b;
            }
            Ok((den > 0.0).then(|| (num / den).sqrt()))
        })
        .collect()
}
