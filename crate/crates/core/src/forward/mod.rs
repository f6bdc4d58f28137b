//! Forward models: the periodic 2D film (and its streak reduction) solved by
//! collocation, the axisymmetric film by finite volumes, and the spatially
//! uniform reduction used as an oracle.

pub mod export;
pub mod film;
pub mod radial;
pub mod uniform;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::evaporation::{EvaporationSpec, StreakEvaporation};
use crate::grid::{FieldState, Grid2D, InitialConditions};
use crate::ode::bdf::{self, BdfOptions, BdfStats, BdfStatus, Control};
use crate::ode::dense::DenseLu;
use crate::ode::krylov::Gmres;
use crate::ode::NewtonSolver;
use crate::params::NondimParams;

use film::{HermiteTrack, Stage1, Stage2};

pub use radial::solve_radial;
pub use uniform::{uniform_ode_oracle, UniformTrajectory};

/// Newton linear algebra for the stiff integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolverKind {
    /// Dense LU for small systems, preconditioned GMRES otherwise.
    #[default]
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Points per side of the periodic grid (also the streak resolution).
    pub grid: usize,
    /// Cells on (0, R0) for the axisymmetric model.
    pub radial_cells: usize,
    /// 2/3-rule filtering of every transform.
    pub dealias: bool,
    /// Minimum thickness treated as touchdown.
    pub touchdown_h: f64,
    pub linear_solver: LinearSolverKind,
    pub krylov_tol: f64,
    pub krylov_max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            abs_tol: 1e-9,
            max_steps: 20_000,
            grid: 40,
            radial_cells: 64,
            dealias: false,
            touchdown_h: 1e-3,
            linear_solver: LinearSolverKind::Auto,
            krylov_tol: 1e-3,
            krylov_max_iter: 40,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > 0.0 && v <= 1e-2) {
                return Err(domain(name, format!("must lie in (0, 1e-2], got {v}")));
            }
        }
        if self.grid < 4 || self.grid % 2 != 0 {
            return Err(domain(
                "grid",
                format!("must be even and at least 4, got {}", self.grid),
            ));
        }
        if self.radial_cells < 4 {
            return Err(domain("radial_cells", "must be at least 4"));
        }
        if !(self.touchdown_h > 0.0 && self.touchdown_h < 1.0) {
            return Err(domain("touchdown_h", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub(crate) fn bdf(&self) -> BdfOptions {
        BdfOptions {
            rtol: self.rel_tol,
            atol: self.abs_tol,
            max_steps: self.max_steps,
            ..Default::default()
        }
    }

    pub(crate) fn newton_solver<S>(&self, dim: usize) -> Box<dyn NewtonSolver<S>>
    where
        S: crate::ode::krylov::Preconditioned,
    {
        let dense = match self.linear_solver {
            LinearSolverKind::Auto => dim <= 400,
            LinearSolverKind::Dense => true,
            LinearSolverKind::Krylov => false,
        };
        if dense {
            Box::new(DenseLu::new(dim))
        } else {
            Box::new(Gmres::new(dim, self.krylov_tol, self.krylov_max_iter))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Success,
    /// Non-finite values or too many steps.
    IntegratorFailure,
    StepUnderflow,
    /// The film thinned below the touchdown threshold.
    Touchdown,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        self == SolveStatus::Success
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evaluations: usize,
    pub wall_seconds: f64,
}

impl SolveStats {
    fn absorb(&mut self, s: &BdfStats, rhs: usize) {
        self.steps += s.steps;
        self.rejected += s.rejected;
        self.rhs_evaluations += rhs;
    }
}

/// States at the requested times. On failure, only the times reached are
/// present and `failed_at` records where integration stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub times: Vec<f64>,
    pub states: Vec<FieldState>,
    pub status: SolveStatus,
    pub failed_at: Option<f64>,
    /// Node coordinates along each array axis (`y` has one entry in 1D).
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn final_state(&self) -> Option<&FieldState> {
        self.states.last()
    }
}

pub(crate) fn status_of(s: BdfStatus) -> SolveStatus {
    match s {
        BdfStatus::Finished => SolveStatus::Success,
        BdfStatus::StepUnderflow => SolveStatus::StepUnderflow,
        BdfStatus::MaxSteps | BdfStatus::Stopped => SolveStatus::IntegratorFailure,
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(domain("times", "at least one output time is required"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain(
            "times",
            "must be non-negative and strictly increasing",
        ));
    }
    if !times.iter().all(|t| t.is_finite()) {
        return Err(domain("times", "must be finite"));
    }
    Ok(())
}

/// Time at which min h crossed `level` between two accepted steps, by
/// linear interpolation (the integrator may step well past it).
pub(crate) fn crossing(prev: (f64, f64), now: (f64, f64), level: f64) -> f64 {
    let (t0, h0) = prev;
    let (t1, h1) = now;
    if h0 <= h1 || !h1.is_finite() {
        return t1;
    }
    t0 + (t1 - t0) * ((h0 - level) / (h0 - h1)).clamp(0.0, 1.0)
}

/// Evenly spaced output times 0, t_end/(k−1), ..., t_end.
pub fn output_times(t_end: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| t_end * i as f64 / (count - 1) as f64)
        .collect()
}

/// A periodic problem on an `nx × ny` grid with J sampled at the nodes.
pub(crate) struct PeriodicProblem<'a> {
    pub nx: usize,
    pub ny: usize,
    pub j: Vec<f64>,
    pub nd: &'a NondimParams,
    pub ic: &'a InitialConditions,
    pub opts: &'a SolverOptions,
}

/// Output of stage 1 before the dye is added.
pub(crate) struct Stage1Output {
    pub outputs: Vec<Vec<f64>>,
    pub track: HermiteTrack,
    pub status: SolveStatus,
    pub t_reached: f64,
    pub stats: SolveStats,
}

impl PeriodicProblem<'_> {
    fn n(&self) -> usize {
        self.nx * self.ny
    }

    pub fn stage1_system(&self) -> Stage1 {
        Stage1::new(
            self.nx,
            self.ny,
            self.j.clone(),
            self.nd.pc,
            self.nd.pe_c,
            self.opts.dealias,
        )
    }

    pub fn run_stage1(&self, times: &[f64]) -> Stage1Output {
        let n = self.n();
        let mut sys = self.stage1_system();
        let mut y0 = vec![1.0; 2 * n];
        y0[n..].iter_mut().for_each(|v| *v = 1.0);
        let mut lin = self.opts.newton_solver::<Stage1>(2 * n);
        let mut track = HermiteTrack::default();
        let mut slope = vec![0.0; 2 * n];
        crate::ode::OdeSystem::rhs(&mut sys, 0.0, &y0, &mut slope);
        track.push(0.0, &y0[..n], &slope[..n]);
        let mut touchdown = None;
        let mut last = (0.0, 1.0);
        let h_min = self.opts.touchdown_h;
        let out = bdf::integrate(
            &mut sys,
            lin.as_mut(),
            0.0,
            &y0,
            times,
            &self.opts.bdf(),
            |s, t, y| {
                let h = &y[..n];
                if h.iter().any(|v| !v.is_finite()) {
                    return Control::Stop;
                }
                let low = h.iter().copied().fold(f64::INFINITY, f64::min);
                if low < h_min {
                    touchdown = Some(crossing(last, (t, low), h_min));
                    return Control::Stop;
                }
                last = (t, low);
                crate::ode::OdeSystem::rhs(s, t, y, &mut slope);
                track.push(t, &y[..n], &slope[..n]);
                Control::Continue
            },
        );
        let status = if touchdown.is_some() {
            SolveStatus::Touchdown
        } else {
            status_of(out.status)
        };
        let mut stats = SolveStats::default();
        stats.absorb(&out.stats, sys.evaluations);
        Stage1Output {
            outputs: out.outputs,
            track,
            status,
            t_reached: touchdown.unwrap_or(out.t),
            stats,
        }
    }

    pub fn run_stage2(
        &self,
        track: HermiteTrack,
        times: &[f64],
    ) -> (Vec<Vec<f64>>, SolveStatus, BdfStats, usize) {
        let n = self.n();
        let mut sys = Stage2::new(self.nx, self.ny, self.nd.pe_f, track, self.opts.dealias);
        let q0 = vec![self.ic.f0; n];
        let mut lin = self.opts.newton_solver::<Stage2>(n);
        let out = bdf::integrate(
            &mut sys,
            lin.as_mut(),
            0.0,
            &q0,
            times,
            &self.opts.bdf(),
            |_, _, q| {
                if q.iter().all(|v| v.is_finite()) {
                    Control::Continue
                } else {
                    Control::Stop
                }
            },
        );
        (
            out.outputs,
            status_of(out.status),
            out.stats,
            sys.evaluations,
        )
    }

    /// Assembles field states from stage outputs `[h, m]` and `q`.
    pub fn states(&self, times: &[f64], hm: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<FieldState> {
        let n = self.n();
        let mut sys = self.stage1_system();
        times
            .iter()
            .zip(hm.iter().zip(q))
            .map(|(&t, (hm, q))| {
                let h = hm[..n].to_vec();
                let c: Vec<f64> = hm[n..].iter().zip(&h).map(|(m, h)| m / h).collect();
                let f: Vec<f64> = q.iter().zip(&h).map(|(q, h)| q / h).collect();
                let (p, fx, fy) = sys.diagnostics(&h);
                let u_bar = fx.iter().zip(&h).map(|(a, h)| a / h).collect();
                let v_bar = fy.iter().zip(&h).map(|(a, h)| a / h).collect();
                FieldState {
                    t,
                    shape: (self.ny, self.nx),
                    h,
                    c,
                    f,
                    p,
                    u_bar,
                    v_bar,
                }
            })
            .collect()
    }

    pub fn solve(&self, times: &[f64]) -> SolveResult {
        let start = std::time::Instant::now();
        let s1 = self.run_stage1(times);
        let reached = s1.outputs.len();
        let mut stats = s1.stats;
        let (q, status2) = if reached > 0 {
            let (q, st, bs, evals) = self.run_stage2(s1.track, &times[..reached]);
            stats.absorb(&bs, evals);
            (q, st)
        } else {
            (Vec::new(), SolveStatus::Success)
        };
        let status = if !s1.status.is_success() {
            s1.status
        } else {
            status2
        };
        let done = reached.min(q.len());
        let states = self.states(&times[..done], &s1.outputs[..done], &q[..done]);
        stats.wall_seconds = start.elapsed().as_secs_f64();
        SolveResult {
            times: times[..done].to_vec(),
            states,
            status,
            failed_at: (!status.is_success()).then_some(s1.t_reached),
            x: (0..self.nx)
                .map(|j| crate::grid::node(j, self.nx))
                .collect(),
            y: if self.ny == 1 {
                vec![0.0]
            } else {
                (0..self.ny)
                    .map(|i| crate::grid::node(i, self.ny))
                    .collect()
            },
            stats,
        }
    }
}

/// Solves the periodic 2D model to each of `times` (which must start at or
/// after 0 and increase).
pub fn solve_2d(
    spec: &EvaporationSpec,
    nd: &NondimParams,
    ic: &InitialConditions,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    check_times(times)?;
    let grid = Grid2D::square(opts.grid)?;
    let j = spec.compile()?.sample(&grid);
    let problem = PeriodicProblem {
        nx: grid.nx,
        ny: grid.ny,
        j,
        nd,
        ic,
        opts,
    };
    Ok(problem.solve(times))
}

/// Solves the periodic streak model on `opts.grid` points of (−π, π].
pub fn solve_streak(
    spec: &StreakEvaporation,
    nd: &NondimParams,
    ic: &InitialConditions,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    check_times(times)?;
    spec.validate()?;
    let n = opts.grid;
    let j = (0..n).map(|k| spec.eval(crate::grid::node(k, n))).collect();
    let problem = PeriodicProblem {
        nx: n,
        ny: 1,
        j,
        nd,
        ic,
        opts,
    };
    Ok(problem.solve(times))
}
