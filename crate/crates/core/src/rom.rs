//! Proper orthogonal decomposition of short-time snapshots and the
//! projected (lift, evaluate, project) reduced model.
//!
//! Bases are built per conserved quantity: h, m = h c and q = h f.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::evaporation::EvaporationSpec;
use crate::forward::film::{HermiteTrack, Stage1, Stage2};
use crate::forward::{
    check_times, crossing, output_times, solve_2d, status_of, PeriodicProblem, SolveResult,
    SolveStats, SolveStatus, SolverOptions,
};
use crate::grid::{node, FieldState, Grid2D, InitialConditions};
use crate::ode::bdf::{self, Control};
use crate::ode::dense::DenseLu;
use crate::ode::OdeSystem;
use crate::params::NondimParams;

const MAGIC: &[u8; 8] = b"TFPODBAS";
const VERSION: u32 = 1;

/// Names of the reduced quantities, in storage order.
pub const FIELD_ORDER: [&str; 3] = ["h", "hc", "hf"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RomOptions {
    /// Fraction of the horizon covered by snapshots.
    pub snapshot_window: f64,
    pub snapshot_count: usize,
    /// Retained fraction of fluctuation energy.
    pub energy_threshold: f64,
    pub max_modes: usize,
    /// Relative tolerance of the snapshot solve (absolute is 1% of it).
    pub snapshot_rel_tol: f64,
}

impl Default for RomOptions {
    fn default() -> Self {
        Self {
            snapshot_window: 0.1,
            snapshot_count: 40,
            energy_threshold: 1.0 - 1e-14,
            max_modes: 60,
            snapshot_rel_tol: 1e-10,
        }
    }
}

impl RomOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.snapshot_window > 0.0 && self.snapshot_window <= 1.0) {
            return Err(domain("snapshot_window", "must lie in (0, 1]"));
        }
        if !(self.energy_threshold > 0.9 && self.energy_threshold < 1.0) {
            return Err(domain("energy_threshold", "must lie in (0.9, 1)"));
        }
        if self.snapshot_count < 2 {
            return Err(domain(
                "snapshot_count",
                "at least two snapshots are required",
            ));
        }
        if !(self.snapshot_rel_tol > 0.0 && self.snapshot_rel_tol <= 1e-2) {
            return Err(domain("snapshot_rel_tol", "must lie in (0, 1e-2]"));
        }
        if self.max_modes == 0 {
            return Err(domain("max_modes", "must be positive"));
        }
        Ok(())
    }
}

/// Mean plus orthonormal fluctuation modes of one quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBasis {
    pub name: String,
    pub mean: DVector<f64>,
    /// Columns are modes.
    pub modes: DMatrix<f64>,
    /// All singular values of the centred snapshot matrix, non-increasing.
    pub singular_values: Vec<f64>,
}

impl FieldBasis {
    pub fn rank(&self) -> usize {
        self.modes.ncols()
    }

    /// Fraction of fluctuation energy captured by the retained modes.
    pub fn energy(&self) -> f64 {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return 1.0;
        }
        let kept: f64 = self
            .singular_values
            .iter()
            .take(self.rank())
            .map(|s| s * s)
            .sum();
        kept / total
    }

    pub fn project(&self, u: &[f64]) -> DVector<f64> {
        let d = DVector::from_column_slice(u) - &self.mean;
        self.modes.tr_mul(&d)
    }

    pub fn lift_into(&self, a: &[f64], out: &mut [f64]) {
        let mut v = DVector::from_column_slice(&self.mean.as_slice()[..]);
        if !a.is_empty() {
            v.gemv(1.0, &self.modes, &DVector::from_column_slice(a), 1.0);
        }
        out.copy_from_slice(v.as_slice());
    }

    pub fn lift(&self, a: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.mean.len()];
        self.lift_into(a, &mut out);
        out
    }

    /// Keeps only the first `r` modes.
    pub fn truncated(&self, r: usize) -> Self {
        let r = r.min(self.rank());
        Self {
            name: self.name.clone(),
            mean: self.mean.clone(),
            modes: self.modes.columns(0, r).into_owned(),
            singular_values: self.singular_values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub nx: usize,
    pub ny: usize,
    pub fields: Vec<FieldBasis>,
    pub snapshot_count: usize,
    pub energy_threshold: f64,
    pub warnings: Vec<String>,
}

fn field_values(s: &FieldState, which: usize) -> Vec<f64> {
    match which {
        0 => s.h.clone(),
        1 => s.h.iter().zip(&s.c).map(|(h, c)| h * c).collect(),
        _ => s.h.iter().zip(&s.f).map(|(h, f)| h * f).collect(),
    }
}

/// Centres the snapshot columns and keeps the leading singular vectors.
fn reduce(
    name: &str,
    columns: &[Vec<f64>],
    opts: &RomOptions,
    warnings: &mut Vec<String>,
) -> FieldBasis {
    let n = columns[0].len();
    let s = columns.len();
    let mut mean = DVector::zeros(n);
    for c in columns {
        mean += DVector::from_column_slice(c);
    }
    mean /= s as f64;
    let mut x = DMatrix::zeros(n, s);
    for (k, c) in columns.iter().enumerate() {
        x.set_column(k, &(DVector::from_column_slice(c) - &mean));
    }
    let svd = x.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let total: f64 = sv.iter().map(|v| v * v).sum();
    let smax = sv.first().copied().unwrap_or(0.0);
    // fluctuations at round-off level of the data itself are not modes
    let data_scale = smax.max(mean.norm() * (s as f64).sqrt());
    let rank_tol = data_scale * (n.max(s) as f64) * f64::EPSILON * 10.0;
    let numerical_rank = sv.iter().take_while(|&&v| v > rank_tol && v > 0.0).count();
    let mut r = 0;
    if total > 0.0 {
        let mut acc = 0.0;
        for v in &sv {
            if acc / total >= opts.energy_threshold {
                break;
            }
            acc += v * v;
            r += 1;
        }
    }
    if r > numerical_rank {
        warnings.push(format!(
            "{name}: energy threshold needs {r} modes but numerical rank is {numerical_rank}; truncated"
        ));
        r = numerical_rank;
    }
    if r > opts.max_modes {
        warnings.push(format!(
            "{name}: capped at {} modes (threshold asked for {r})",
            opts.max_modes
        ));
        r = opts.max_modes;
    }
    let mut modes = DMatrix::zeros(n, r);
    for (k, &col) in order.iter().take(r).enumerate() {
        modes.set_column(k, &u.column(col));
    }
    FieldBasis {
        name: name.to_string(),
        mean,
        modes,
        singular_values: sv,
    }
}

pub fn build_basis(snapshots: &[FieldState], opts: &RomOptions) -> Result<PodBasis> {
    opts.validate()?;
    if snapshots.len() < 2 {
        return Err(Error::Basis("at least two snapshots are required".into()));
    }
    let shape = snapshots[0].shape;
    if snapshots.iter().any(|s| s.shape != shape) {
        return Err(Error::Shape("snapshots have different shapes".into()));
    }
    let mut warnings = Vec::new();
    let fields = FIELD_ORDER
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let cols: Vec<Vec<f64>> = snapshots.iter().map(|s| field_values(s, k)).collect();
            reduce(name, &cols, opts, &mut warnings)
        })
        .collect();
    Ok(PodBasis {
        nx: shape.1,
        ny: shape.0,
        fields,
        snapshot_count: snapshots.len(),
        energy_threshold: opts.energy_threshold,
        warnings,
    })
}

/// Full-order snapshots over the first `snapshot_window · t_end`.
pub fn collect_snapshots(
    spec: &EvaporationSpec,
    nd: &NondimParams,
    ic: &InitialConditions,
    t_end: f64,
    solver: &SolverOptions,
    opts: &RomOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    let times = output_times(opts.snapshot_window * t_end, opts.snapshot_count);
    let solver = SolverOptions {
        rel_tol: opts.snapshot_rel_tol,
        abs_tol: 1e-2 * opts.snapshot_rel_tol,
        ..*solver
    };
    solve_2d(spec, nd, ic, &times, &solver)
}

impl PodBasis {
    pub fn mode_counts(&self) -> Vec<usize> {
        self.fields.iter().map(FieldBasis::rank).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        put_u32(&mut buf, VERSION);
        put_u32(&mut buf, self.nx as u32);
        put_u32(&mut buf, self.ny as u32);
        put_u32(&mut buf, self.snapshot_count as u32);
        buf.extend_from_slice(&self.energy_threshold.to_le_bytes());
        put_u32(&mut buf, self.fields.len() as u32);
        for f in &self.fields {
            put_u32(&mut buf, f.name.len() as u32);
            buf.extend_from_slice(f.name.as_bytes());
            put_u32(&mut buf, f.rank() as u32);
            put_u32(&mut buf, f.singular_values.len() as u32);
        }
        for f in &self.fields {
            for v in f
                .singular_values
                .iter()
                .chain(f.mean.iter())
                .chain(f.modes.iter())
            {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::File::create(path)?.write_all(&buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut r = Reader {
            bytes: &bytes,
            pos: 0,
        };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a basis file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported basis version {version}"
            )));
        }
        let nx = r.u32()? as usize;
        let ny = r.u32()? as usize;
        let snapshot_count = r.u32()? as usize;
        let energy_threshold = r.f64()?;
        let nfields = r.u32()? as usize;
        let mut heads = Vec::with_capacity(nfields);
        for _ in 0..nfields {
            let len = r.u32()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Format("field name is not UTF-8".into()))?;
            heads.push((name, r.u32()? as usize, r.u32()? as usize));
        }
        let n = nx * ny;
        let mut fields = Vec::with_capacity(nfields);
        for (name, rank, nsv) in heads {
            let singular_values = r.f64s(nsv)?;
            let mean = DVector::from_vec(r.f64s(n)?);
            let modes = DMatrix::from_vec(n, rank, r.f64s(n * rank)?);
            fields.push(FieldBasis {
                name,
                mean,
                modes,
                singular_values,
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes in basis file".into()));
        }
        let names: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
        if names != FIELD_ORDER {
            return Err(Error::Format(format!("unexpected field order {names:?}")));
        }
        Ok(Self {
            nx,
            ny,
            fields,
            snapshot_count,
            energy_threshold,
            warnings: Vec::new(),
        })
    }
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated basis file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// A full-order system restricted to affine subspaces, one per block.
struct Projected<'a, S> {
    full: S,
    blocks: Vec<&'a FieldBasis>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl<'a, S: OdeSystem> Projected<'a, S> {
    fn new(full: S, blocks: Vec<&'a FieldBasis>) -> Self {
        let n = full.dim();
        Self {
            full,
            blocks,
            y: vec![0.0; n],
            dy: vec![0.0; n],
        }
    }

    fn lift(&self, a: &[f64], out: &mut [f64]) {
        let mut off = 0;
        let mut pos = 0;
        for b in &self.blocks {
            let n = b.mean.len();
            b.lift_into(&a[off..off + b.rank()], &mut out[pos..pos + n]);
            off += b.rank();
            pos += n;
        }
    }

    fn project(&self, full: &[f64], out: &mut [f64], centred: bool) {
        let mut off = 0;
        let mut pos = 0;
        for b in &self.blocks {
            let n = b.mean.len();
            let mut v = DVector::from_column_slice(&full[pos..pos + n]);
            if centred {
                v -= &b.mean;
            }
            let c = b.modes.tr_mul(&v);
            out[off..off + b.rank()].copy_from_slice(c.as_slice());
            off += b.rank();
            pos += n;
        }
    }
}

impl<S: OdeSystem> OdeSystem for Projected<'_, S> {
    fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.rank()).sum()
    }

    fn rhs(&mut self, t: f64, a: &[f64], da: &mut [f64]) {
        let mut y = std::mem::take(&mut self.y);
        self.lift(a, &mut y);
        let mut dy = std::mem::take(&mut self.dy);
        self.full.rhs(t, &y, &mut dy);
        self.project(&dy, da, false);
        self.y = y;
        self.dy = dy;
    }
}

/// Integrates the reduced model and lifts the result to full fields.
pub fn solve_reduced(
    spec: &EvaporationSpec,
    nd: &NondimParams,
    ic: &InitialConditions,
    times: &[f64],
    basis: &PodBasis,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    check_times(times)?;
    if basis.nx != opts.grid || basis.ny != opts.grid {
        return Err(Error::Basis(format!(
            "basis is {}x{} but the solver grid is {}",
            basis.nx, basis.ny, opts.grid
        )));
    }
    let start = Instant::now();
    let grid = Grid2D::new(basis.nx, basis.ny)?;
    let problem = PeriodicProblem {
        nx: grid.nx,
        ny: grid.ny,
        j: spec.compile()?.sample(&grid),
        nd,
        ic,
        opts,
    };
    let n = grid.len();
    let [bh, bm, bq] = [&basis.fields[0], &basis.fields[1], &basis.fields[2]];

    let mut s1 = Projected::new(problem.stage1_system(), vec![bh, bm]);
    let dim1 = s1.dim();
    let mut a0 = vec![0.0; dim1];
    let y0 = vec![1.0; 2 * n];
    s1.project(&y0, &mut a0, true);
    let mut lin = DenseLu::new(dim1);
    let mut track = HermiteTrack::default();
    let mut full = vec![0.0; 2 * n];
    let mut slope = vec![0.0; dim1];
    let mut touchdown = None;
    let mut last = (0.0, 1.0);
    let mut record =
        |s: &mut Projected<'_, Stage1>, t: f64, a: &[f64], track: &mut HermiteTrack| {
            s.lift(a, &mut full);
            s.rhs(t, a, &mut slope);
            let dh = &bh.modes * DVector::from_column_slice(&slope[..bh.rank()]);
            track.push(t, &full[..n], dh.as_slice());
            full[..n].iter().copied().fold(f64::INFINITY, f64::min)
        };
    record(&mut s1, 0.0, &a0, &mut track);
    let out1 = bdf::integrate(
        &mut s1,
        &mut lin,
        0.0,
        &a0,
        times,
        &opts.bdf(),
        |s, t, a| {
            let min_h = record(s, t, a, &mut track);
            if !min_h.is_finite() {
                return Control::Stop;
            }
            if min_h < opts.touchdown_h {
                touchdown = Some(crossing(last, (t, min_h), opts.touchdown_h));
                return Control::Stop;
            }
            last = (t, min_h);
            Control::Continue
        },
    );
    let mut status = if touchdown.is_some() {
        SolveStatus::Touchdown
    } else {
        status_of(out1.status)
    };
    let mut stats = SolveStats {
        steps: out1.stats.steps,
        rejected: out1.stats.rejected,
        rhs_evaluations: s1.full.evaluations,
        wall_seconds: 0.0,
    };
    let hm: Vec<Vec<f64>> = out1
        .outputs
        .iter()
        .map(|a| {
            let mut y = vec![0.0; 2 * n];
            s1.lift(a, &mut y);
            y
        })
        .collect();

    let reached = hm.len();
    let mut q = Vec::new();
    if reached > 0 {
        let stage2 = Stage2::new(grid.nx, grid.ny, nd.pe_f, track, opts.dealias);
        let mut s2 = Projected::new(stage2, vec![bq]);
        let mut b0 = vec![0.0; s2.dim()];
        s2.project(&vec![ic.f0; n], &mut b0, true);
        let mut lin2 = DenseLu::new(s2.dim());
        let out2 = bdf::integrate(
            &mut s2,
            &mut lin2,
            0.0,
            &b0,
            &times[..reached],
            &opts.bdf(),
            |_, _, b| {
                if b.iter().all(|v| v.is_finite()) {
                    Control::Continue
                } else {
                    Control::Stop
                }
            },
        );
        if status.is_success() {
            status = status_of(out2.status);
        }
        stats.steps += out2.stats.steps;
        stats.rejected += out2.stats.rejected;
        stats.rhs_evaluations += s2.full.evaluations;
        q = out2.outputs.iter().map(|b| bq.lift(b)).collect();
    }
    let done = reached.min(q.len());
    let states = problem.states(&times[..done], &hm[..done], &q[..done]);
    stats.wall_seconds = start.elapsed().as_secs_f64();
    Ok(SolveResult {
        times: times[..done].to_vec(),
        states,
        status,
        failed_at: (!status.is_success()).then_some(touchdown.unwrap_or(out1.t)),
        x: (0..grid.nx).map(|j| node(j, grid.nx)).collect(),
        y: (0..grid.ny).map(|i| node(i, grid.ny)).collect(),
        stats,
    })
}

/// Wall-clock comparison of full and reduced solves of one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    /// "reduced" or "full-order".
    pub mode: String,
    pub full_seconds: f64,
    pub snapshot_seconds: f64,
    pub reduced_seconds: f64,
    pub speedup: f64,
    pub mode_counts: Vec<usize>,
}

pub fn rom_speedup_report(
    spec: &EvaporationSpec,
    nd: &NondimParams,
    ic: &InitialConditions,
    times: &[f64],
    solver: &SolverOptions,
    rom: Option<&RomOptions>,
) -> Result<SpeedupReport> {
    let full = solve_2d(spec, nd, ic, times, solver)?;
    let full_seconds = full.stats.wall_seconds;
    let Some(rom) = rom else {
        return Ok(SpeedupReport {
            mode: "full-order".into(),
            full_seconds,
            snapshot_seconds: 0.0,
            reduced_seconds: 0.0,
            speedup: 1.0,
            mode_counts: Vec::new(),
        });
    };
    let t_end = *times.last().unwrap_or(&0.0);
    let t0 = Instant::now();
    let snaps = collect_snapshots(spec, nd, ic, t_end, solver, rom)?;
    let basis = build_basis(&snaps.states, rom)?;
    let snapshot_seconds = t0.elapsed().as_secs_f64();
    let reduced = solve_reduced(spec, nd, ic, times, &basis, solver)?;
    let reduced_seconds = reduced.stats.wall_seconds;
    Ok(SpeedupReport {
        mode: "reduced".into(),
        full_seconds,
        snapshot_seconds,
        reduced_seconds,
        speedup: full_seconds / reduced_seconds.max(1e-12),
        mode_counts: basis.mode_counts(),
    })
}
