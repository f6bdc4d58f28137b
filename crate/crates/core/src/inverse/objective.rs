use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaporation::PERIODICITY_THRESHOLD;
use crate::forward::radial::solve_radial;
use crate::forward::{solve_2d, solve_streak, SolveResult, SolverOptions};
use crate::grid::InitialConditions;
use crate::intensity::{intensity, normalization_coefficient};
use crate::params::NondimParams;
use crate::rom::{build_basis, collect_snapshots, solve_reduced, RomOptions};

use super::layout::{Layout, ModelSpec};

pub const DEFAULT_PENALTY: f64 = 1e8;

/// Full-order solves or a POD model rebuilt for every candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForwardMode {
    Full,
    #[default]
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSetup {
    pub nd: NondimParams,
    pub ic: InitialConditions,
    pub solver: SolverOptions,
    pub mode: ForwardMode,
    pub rom: RomOptions,
}

impl ModelSetup {
    pub fn full(nd: NondimParams, ic: InitialConditions, solver: SolverOptions) -> Self {
        Self {
            nd,
            ic,
            solver,
            mode: ForwardMode::Full,
            rom: RomOptions::default(),
        }
    }

    /// Runs the forward model selected by `spec`.
    pub fn solve(&self, spec: &ModelSpec, times: &[f64]) -> Result<SolveResult> {
        match spec {
            ModelSpec::Planar(s) => match self.mode {
                ForwardMode::Full => solve_2d(s, &self.nd, &self.ic, times, &self.solver),
                ForwardMode::Reduced => {
                    let t_end = *times.last().unwrap_or(&0.0);
                    let snaps =
                        collect_snapshots(s, &self.nd, &self.ic, t_end, &self.solver, &self.rom)?;
                    if !snaps.status.is_success() {
                        return Ok(snaps);
                    }
                    let basis = build_basis(&snaps.states, &self.rom)?;
                    solve_reduced(s, &self.nd, &self.ic, times, &basis, &self.solver)
                }
            },
            ModelSpec::Radial(r) => solve_radial(r, &self.nd, &self.ic, times, &self.solver),
            ModelSpec::Streak(s) => solve_streak(s, &self.nd, &self.ic, times, &self.solver),
        }
    }

    /// Normalized intensity frames; `Err` carries the reason for rejecting
    /// the candidate.
    pub fn render(
        &self,
        spec: &ModelSpec,
        times: &[f64],
    ) -> std::result::Result<Vec<Vec<f64>>, String> {
        screen(spec)?;
        let i0 = normalization_coefficient(self.ic.f0, self.nd.phi).map_err(|e| e.to_string())?;
        let out = self.solve(spec, times).map_err(|e| e.to_string())?;
        if !out.status.is_success() || out.states.len() != times.len() {
            return Err(format!(
                "forward solve {:?} at t = {:?}",
                out.status, out.failed_at
            ));
        }
        Ok(out
            .states
            .iter()
            .map(|s| intensity(&s.h, &s.f, i0, self.nd.phi))
            .collect())
    }
}

/// Structural checks applied before any solve.
fn screen(spec: &ModelSpec) -> std::result::Result<(), String> {
    let nonneg = |name: &str, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(format!("{name} = {v} must be non-negative"))
        }
    };
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(format!("{name} = {v} must be positive"))
        }
    };
    match spec {
        ModelSpec::Planar(s) => {
            nonneg("v_b", s.v_b)?;
            for p in &s.peaks {
                nonneg("a", p.height())?;
                positive("beta", p.beta())?;
                let (x, y) = p.center();
                if !(x.is_finite() && y.is_finite()) {
                    return Err("peak centre is not finite".into());
                }
            }
            let defect = s.periodicity_defect().map_err(|e| e.to_string())?;
            if !(defect <= PERIODICITY_THRESHOLD) {
                return Err(format!("J is not periodic (defect {defect:.2e})"));
            }
        }
        ModelSpec::Radial(r) => {
            nonneg("v_b", r.v_b)?;
            nonneg("a", r.a)?;
            positive("beta", r.beta)?;
            positive("r_w", r.r_w)?;
        }
        ModelSpec::Streak(s) => {
            nonneg("v_b", s.v_b)?;
            nonneg("a", s.a)?;
            positive("beta", s.beta)?;
            positive("x_w", s.x_w)?;
            if !(s.periodicity_defect() <= PERIODICITY_THRESHOLD) {
                return Err("J is not periodic".into());
            }
        }
    }
    Ok(())
}

/// Weighted squared misfit between rendered model frames and targets.
#[derive(Debug, Clone)]
pub struct Objective {
    pub layout: Layout,
    pub setup: ModelSetup,
    pub times: Vec<f64>,
    pub target: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub penalty: f64,
}

impl Objective {
    pub fn new(
        layout: Layout,
        setup: ModelSetup,
        times: Vec<f64>,
        target: Vec<Vec<f64>>,
        weights: Vec<f64>,
        penalty: f64,
    ) -> Result<Self> {
        if times.len() != target.len() || target.is_empty() {
            return Err(Error::Shape(format!(
                "{} times for {} frames",
                times.len(),
                target.len()
            )));
        }
        if target.iter().any(|f| f.len() != weights.len()) {
            return Err(Error::Shape(
                "target frames and weights differ in size".into(),
            ));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::Shape("norm region is empty".into()));
        }
        let points = weights.iter().filter(|&&w| w > 0.0).count() as f64;
        if !(penalty > points * target.len() as f64) {
            return Err(crate::error::domain(
                "penalty",
                format!(
                    "{penalty} does not dominate {} frames of {points} points",
                    target.len()
                ),
            ));
        }
        Ok(Self {
            layout,
            setup,
            times,
            target,
            weights,
            penalty,
        })
    }

    /// Model frames for `p`, or the reason `p` is rejected.
    pub fn render(&self, p: &[f64]) -> std::result::Result<Vec<Vec<f64>>, String> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err("non-finite parameter".into());
        }
        let spec = self.layout.decode(p).map_err(|e| e.to_string())?;
        let frames = self.setup.render(&spec, &self.times)?;
        if frames.iter().any(|f| f.len() != self.weights.len()) {
            return Err("model and data sizes differ".into());
        }
        Ok(frames)
    }

    pub fn misfit(&self, frames: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (m, d) in frames.iter().zip(&self.target) {
            for ((a, b), w) in m.iter().zip(d).zip(&self.weights) {
                total += w * (a - b) * (a - b);
            }
        }
        total
    }

    /// Σ over frames and weighted points of (I_th − I_ex)², or the penalty.
    pub fn evaluate(&self, p: &[f64]) -> f64 {
        match self.render(p) {
            Ok(frames) => {
                let v = self.misfit(&frames);
                if v.is_finite() {
                    v.min(self.penalty)
                } else {
                    self.penalty
                }
            }
            Err(_) => self.penalty,
        }
    }
}
