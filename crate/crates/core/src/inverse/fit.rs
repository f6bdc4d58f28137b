use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::forward::radial::R0;
use crate::preprocess::{initial_guess_from_final_frame, GuessDefaults};

use super::layout::{Layout, ModelSpec};
use super::nelder_mead::{nelder_mead, NelderMeadOptions};
use super::objective::{ModelSetup, Objective, DEFAULT_PENALTY};
use super::optim::OptimOutcome;
use super::praxis::{praxis, PraxisOptions};
use super::{relative_error_trace, FitData, Rectangle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    NelderMead,
    /// Brent's principal-axis method.
    Praxis,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NelderMead => "nelder-mead",
            Algorithm::Praxis => "praxis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub algorithm: Algorithm,
    pub x_tol: f64,
    pub f_tol: f64,
    /// Simplex updates (Nelder–Mead) or line searches (PRAXIS).
    pub max_iterations: usize,
    pub max_evaluations: usize,
    pub penalty: f64,
    /// Initial simplex edge relative to max(|p_i|, 1).
    pub simplex_step: f64,
    /// PRAXIS maximum step.
    pub praxis_step: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Praxis,
            x_tol: 1e-8,
            f_tol: 1e-14,
            max_iterations: 500,
            max_evaluations: 20_000,
            penalty: DEFAULT_PENALTY,
            simplex_step: 0.1,
            praxis_step: 0.5,
            max_restarts: 2,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return Err(domain("tolerances", "x_tol and f_tol must be positive"));
        }
        if self.max_iterations == 0 || self.max_evaluations == 0 {
            return Err(domain(
                "max_iterations",
                "iteration budgets must be positive",
            ));
        }
        if !(self.simplex_step > 0.0 && self.praxis_step > 0.0) {
            return Err(domain("step", "initial steps must be positive"));
        }
        Ok(())
    }

    /// Runs the configured minimizer on a plain function.
    pub fn run(&self, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64]) -> OptimOutcome {
        match self.algorithm {
            Algorithm::NelderMead => nelder_mead(
                f,
                x0,
                &NelderMeadOptions {
                    x_tol: self.x_tol,
                    f_tol: self.f_tol,
                    max_iterations: self.max_iterations,
                    max_evaluations: self.max_evaluations,
                    initial_step: self.simplex_step,
                    max_restarts: self.max_restarts,
                    penalty: self.penalty,
                },
            ),
            Algorithm::Praxis => praxis(
                f,
                x0,
                &PraxisOptions {
                    x_tol: self.x_tol,
                    f_tol: self.f_tol,
                    step: self.praxis_step,
                    max_iterations: self.max_iterations,
                    max_evaluations: self.max_evaluations,
                    max_restarts: self.max_restarts,
                    seed: self.seed,
                },
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub layout: Layout,
    pub algorithm: Algorithm,
    pub parameter_names: Vec<String>,
    pub initial: Vec<f64>,
    pub parameters: Vec<f64>,
    pub spec: ModelSpec,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
    pub times: Vec<f64>,
    /// Per-frame relative error of the fitted model against its targets.
    pub rel_err: Vec<Option<f64>>,
    pub status: FitStatus,
    pub seconds: f64,
}

impl FitResult {
    pub fn final_rel_err(&self) -> Option<f64> {
        self.rel_err.last().copied().flatten()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Columns: frame, t, rel_err (empty when undefined).
    pub fn write_rel_err_csv(&self, path: &Path) -> Result<()> {
        write_trace(path, &self.times, &self.rel_err)
    }
}

pub(crate) fn write_trace(path: &Path, times: &[f64], trace: &[Option<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["frame", "t", "rel_err"])?;
    for (k, (t, e)) in times.iter().zip(trace).enumerate() {
        w.write_record(&[
            k.to_string(),
            t.to_string(),
            e.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Minimizes `obj` from `p0` and reports the best point seen.
pub fn minimize(obj: &Objective, p0: &[f64], opts: &OptimizerOptions) -> Result<FitResult> {
    opts.validate()?;
    if p0.len() != obj.layout.len() {
        return Err(Error::Shape(format!(
            "initial vector has {} entries, layout needs {}",
            p0.len(),
            obj.layout.len()
        )));
    }
    let start = Instant::now();
    let mut f = |p: &[f64]| obj.evaluate(p);
    let out = opts.run(&mut f, p0);
    let spec = obj.layout.decode(&out.x)?;
    let rel_err = match obj.render(&out.x) {
        Ok(frames) => relative_error_trace(&frames, &obj.target, &obj.weights)?,
        Err(_) => vec![None; obj.times.len()],
    };
    Ok(FitResult {
        layout: obj.layout,
        algorithm: opts.algorithm,
        parameter_names: obj.layout.names(),
        initial: p0.to_vec(),
        parameters: out.x,
        spec,
        objective: out.f,
        iterations: out.iterations,
        evaluations: out.evaluations,
        restarts: out.restarts,
        history: out.history,
        times: obj.times.clone(),
        rel_err,
        status: if out.converged {
            FitStatus::Converged
        } else {
            FitStatus::MaxIterations
        },
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Fits a planar layout (one ellipse or several) to 2D data.
pub fn fit_planar(
    data: &FitData,
    layout: Layout,
    p0: &[f64],
    setup: &ModelSetup,
    rect: &Rectangle,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    if !matches!(layout, Layout::Ellipse | Layout::MultiSpot { .. }) {
        return Err(Error::Config(format!("{layout:?} is not a planar layout")));
    }
    if setup.solver.grid != data.n {
        return Err(Error::Grid(format!(
            "solver grid {} differs from data grid {}",
            setup.solver.grid, data.n
        )));
    }
    let weights = rect.mask(&data.grid())?;
    let obj = Objective::new(
        layout,
        *setup,
        data.times.clone(),
        data.frames.clone(),
        weights,
        opts.penalty,
    )?;
    minimize(&obj, p0, opts)
}

/// Multi-peak fit with 7K + 1 parameters.
pub fn fit_multi_spot(
    data: &FitData,
    peaks: usize,
    p0: &[f64],
    setup: &ModelSetup,
    rect: &Rectangle,
    opts: &OptimizerOptions,
) -> Result<FitResult> {
    if peaks < 2 {
        return Err(domain("peaks", "multi-spot fits need at least two peaks"));
    }
    fit_planar(data, Layout::MultiSpot { peaks }, p0, setup, rect, opts)
}

/// A 1D fit together with its 2D lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedFit {
    pub fit: FitResult,
    /// Spot centre used for averaging or profile extraction.
    pub center: (f64, f64),
    pub lifted_rel_err: Vec<Option<f64>>,
    #[serde(skip)]
    pub lifted: Vec<Vec<f64>>,
}

impl LiftedFit {
    pub fn final_lifted_rel_err(&self) -> Option<f64> {
        self.lifted_rel_err.last().copied().flatten()
    }

    pub fn write_lifted_csv(&self, path: &Path) -> Result<()> {
        write_trace(path, &self.fit.times, &self.lifted_rel_err)
    }
}

/// Periodic bilinear interpolation on the n×n model grid.
fn sample_periodic(frame: &[f64], n: usize, x: f64, y: f64) -> f64 {
    let h = 2.0 * PI / n as f64;
    // node j sits at −π + (j + 1) h
    let u = ((x + PI) / h - 1.0).rem_euclid(n as f64);
    let v = ((y + PI) / h - 1.0).rem_euclid(n as f64);
    let (j0, i0) = (u.floor() as usize % n, v.floor() as usize % n);
    let (tx, ty) = (u - u.floor(), v - v.floor());
    let (j1, i1) = ((j0 + 1) % n, (i0 + 1) % n);
    let at = |i: usize, j: usize| frame[i * n + j];
    (1.0 - ty) * ((1.0 - tx) * at(i0, j0) + tx * at(i0, j1))
        + ty * ((1.0 - tx) * at(i1, j0) + tx * at(i1, j1))
}

/// Linear interpolation of cell-centred radial values at radius r.
fn radial_value(values: &[f64], r: f64) -> f64 {
    let n = values.len();
    let dr = R0 / n as f64;
    let p = r / dr - 0.5;
    if p <= 0.0 {
        return values[0];
    }
    let k = p.floor() as usize;
    if k + 1 >= n {
        return values[n - 1];
    }
    let t = p - k as f64;
    values[k] * (1.0 - t) + values[k + 1] * t
}

/// Dark-region centroid of the last frame, or the origin.
fn spot_center(data: &FitData) -> (f64, f64) {
    let last = data.frames.last().expect("validated non-empty");
    match initial_guess_from_final_frame(last, &data.grid(), &GuessDefaults::default()) {
        Ok(g) if g.warnings.iter().all(|w| !w.starts_with("no dark region")) => {
            (g.peak.x0, g.peak.y0)
        }
        _ => (0.0, 0.0),
    }
}

const ANGLES: usize = 64;

/// Fits (v_b, r_w, a, β) to the azimuthal average of the data about the
/// spot centre, then rotates the fitted intensity back onto the grid.
pub fn fit_radial_to_2d(
    data: &FitData,
    p0: &[f64],
    setup: &ModelSetup,
    rect: &Rectangle,
    opts: &OptimizerOptions,
) -> Result<LiftedFit> {
    let center = spot_center(data);
    let cells = setup.solver.radial_cells;
    let dr = R0 / cells as f64;
    let radii: Vec<f64> = (0..cells).map(|k| (k as f64 + 0.5) * dr).collect();
    let reach = (rect.x_max - rect.x_min).min(rect.y_max - rect.y_min) / 2.0;
    let weights: Vec<f64> = radii
        .iter()
        .map(|&r| if r <= reach { r / R0 } else { 0.0 })
        .collect();
    let target: Vec<Vec<f64>> = data
        .frames
        .iter()
        .map(|f| {
            radii
                .iter()
                .map(|&r| {
                    (0..ANGLES)
                        .map(|m| {
                            let th = 2.0 * PI * m as f64 / ANGLES as f64;
                            sample_periodic(
                                f,
                                data.n,
                                center.0 + r * th.cos(),
                                center.1 + r * th.sin(),
                            )
                        })
                        .sum::<f64>()
                        / ANGLES as f64
                })
                .collect()
        })
        .collect();
    let obj = Objective::new(
        Layout::Radial,
        *setup,
        data.times.clone(),
        target,
        weights,
        opts.penalty,
    )?;
    let fit = minimize(&obj, p0, opts)?;
    let grid = data.grid();
    let lifted: Vec<Vec<f64>> = match obj.render(&fit.parameters) {
        Ok(frames) => frames
            .iter()
            .map(|prof| grid.sample(|x, y| radial_value(prof, (x - center.0).hypot(y - center.1))))
            .collect(),
        Err(_) => Vec::new(),
    };
    finish_lift(fit, center, lifted, data, rect)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreakAxis {
    /// Profile along x, extruded along y.
    Horizontal,
    /// Profile along y, extruded along x.
    Vertical,
}

/// Fits (v_b, x_w, a, β) to the line through each frame's intensity
/// minimum and extrudes the fit across the other axis.
pub fn fit_streak_to_2d(
    data: &FitData,
    axis: StreakAxis,
    p0: &[f64],
    setup: &ModelSetup,
    rect: &Rectangle,
    opts: &OptimizerOptions,
) -> Result<LiftedFit> {
    let n = data.n;
    if setup.solver.grid != n {
        return Err(Error::Grid(format!(
            "solver grid {} differs from data grid {n}",
            setup.solver.grid
        )));
    }
    let grid = data.grid();
    let mask = rect.mask(&grid)?;
    let argmin = |f: &[f64]| -> (usize, usize) {
        let mut best = (n / 2, n / 2);
        let mut lo = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                if mask[i * n + j] > 0.0 && f[i * n + j] < lo {
                    lo = f[i * n + j];
                    best = (i, j);
                }
            }
        }
        best
    };
    let (ci, cj) = argmin(data.frames.last().expect("non-empty"));
    let center = (grid.x(cj), grid.y(ci));
    let target: Vec<Vec<f64>> = data
        .frames
        .iter()
        .map(|f| {
            let (i, j) = argmin(f);
            match axis {
                StreakAxis::Horizontal => f[i * n..(i + 1) * n].to_vec(),
                StreakAxis::Vertical => (0..n).map(|r| f[r * n + j]).collect(),
            }
        })
        .collect();
    let (lo, hi, x_c) = match axis {
        StreakAxis::Horizontal => (rect.x_min, rect.x_max, center.0),
        StreakAxis::Vertical => (rect.y_min, rect.y_max, center.1),
    };
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            let s = grid.x(k);
            if (lo..=hi).contains(&s) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let layout = Layout::Streak { x_c };
    let obj = Objective::new(
        layout,
        *setup,
        data.times.clone(),
        target,
        weights,
        opts.penalty,
    )?;
    let fit = minimize(&obj, p0, opts)?;
    let lifted: Vec<Vec<f64>> = match obj.render(&fit.parameters) {
        Ok(frames) => frames
            .iter()
            .map(|prof| {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = match axis {
                            StreakAxis::Horizontal => prof[j],
                            StreakAxis::Vertical => prof[i],
                        };
                    }
                }
                out
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    finish_lift(fit, center, lifted, data, rect)
}

fn finish_lift(
    fit: FitResult,
    center: (f64, f64),
    lifted: Vec<Vec<f64>>,
    data: &FitData,
    rect: &Rectangle,
) -> Result<LiftedFit> {
    let lifted_rel_err = if lifted.is_empty() {
        vec![None; data.frames.len()]
    } else {
        relative_error_trace(&lifted, &data.frames, &rect.mask(&data.grid())?)?
    };
    Ok(LiftedFit {
        fit,
        center,
        lifted_rel_err,
        lifted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_sampling_hits_nodes_and_wraps() {
        let n = 8;
        let frame: Vec<f64> = (0..n * n).map(|k| k as f64).collect();
        let g = crate::grid::Grid2D::square(n).unwrap();
        assert_eq!(sample_periodic(&frame, n, g.x(3), g.y(5)), frame[5 * n + 3]);
        assert!(
            (sample_periodic(&frame, n, g.x(2) + 2.0 * PI, g.y(1)) - frame[n + 2]).abs() < 1e-12
        );
    }

    #[test]
    fn radial_interpolation_is_linear_between_cells() {
        let v = [1.0, 3.0, 5.0, 7.0];
        let dr = R0 / 4.0;
        assert!((radial_value(&v, 1.0 * dr) - 2.0).abs() < 1e-12);
        assert_eq!(radial_value(&v, 0.0), 1.0);
        assert_eq!(radial_value(&v, 10.0), 7.0);
    }
}
