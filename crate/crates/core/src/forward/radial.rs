//! Axisymmetric film on 0 < r < R0 by conservative finite volumes.
//!
//! Cells are centred at r_j = (j + ½)Δr; the face at r = 0 carries zero area
//! and the face at R0 is closed, so the disc integrals of h c and h f are
//! conserved exactly. h, m = h c and q = h f are integrated together.

use std::f64::consts::PI;

use crate::error::Result;
use crate::evaporation::RadialEvaporation;
use crate::grid::{FieldState, InitialConditions};
use crate::ode::bdf::{self, Control};
use crate::ode::dense::DenseLu;
use crate::ode::OdeSystem;
use crate::params::NondimParams;

use super::{
    check_times, crossing, status_of, SolveResult, SolveStats, SolveStatus, SolverOptions,
};

/// Outer radius of the axisymmetric domain.
pub const R0: f64 = PI;

pub(crate) struct Radial {
    n: usize,
    dr: f64,
    r: Vec<f64>,
    j: Vec<f64>,
    pc: f64,
    pe_c: f64,
    pe_f: f64,
    p: Vec<f64>,
    flux: Vec<f64>,
    pub evaluations: usize,
}

impl Radial {
    pub fn new(n: usize, spec: &RadialEvaporation, nd: &NondimParams) -> Self {
        let dr = R0 / n as f64;
        let r: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * dr).collect();
        let j = r.iter().map(|&r| spec.eval(r)).collect();
        Self {
            n,
            dr,
            r,
            j,
            pc: nd.pc,
            pe_c: nd.pe_c,
            pe_f: nd.pe_f,
            p: vec![0.0; n],
            flux: vec![0.0; n + 1],
            evaluations: 0,
        }
    }

    fn face(&self, k: usize) -> f64 {
        k as f64 * self.dr
    }

    fn pressure(&mut self, h: &[f64]) {
        let (n, dr) = (self.n, self.dr);
        for k in 0..n {
            let right = if k + 1 < n {
                self.face(k + 1) * (h[k + 1] - h[k])
            } else {
                0.0
            };
            let left = if k > 0 {
                self.face(k) * (h[k] - h[k - 1])
            } else {
                0.0
            };
            self.p[k] = -(right - left) / (self.r[k] * dr * dr);
        }
    }

    /// Volume flux h ū at faces (zero at both ends).
    fn thickness_flux(&mut self, h: &[f64]) {
        self.pressure(h);
        for k in 1..self.n {
            let hf = 0.5 * (h[k - 1] + h[k]);
            self.flux[k] = -hf * hf * hf / 12.0 * (self.p[k] - self.p[k - 1]) / self.dr;
        }
        self.flux[0] = 0.0;
        self.flux[self.n] = 0.0;
    }

    fn divergence(&self, fluxes: impl Fn(usize) -> f64, out: &mut [f64]) {
        for k in 0..self.n {
            let right = self.face(k + 1) * fluxes(k + 1);
            let left = self.face(k) * fluxes(k);
            out[k] = (right - left) / (self.r[k] * self.dr);
        }
    }

    fn solute_flux(&self, k: usize, h: &[f64], s: &[f64], pe: f64) -> f64 {
        if k == 0 || k == self.n {
            return 0.0;
        }
        let hf = 0.5 * (h[k - 1] + h[k]);
        let sf = 0.5 * (s[k - 1] + s[k]);
        sf * self.flux[k] - hf * (s[k] - s[k - 1]) / (self.dr * pe)
    }
}

impl OdeSystem for Radial {
    fn dim(&self) -> usize {
        3 * self.n
    }

    fn rhs(&mut self, _t: f64, y: &[f64], d: &mut [f64]) {
        self.evaluations += 1;
        let n = self.n;
        let h = &y[..n];
        let c: Vec<f64> = y[n..2 * n].iter().zip(h).map(|(m, h)| m / h).collect();
        let f: Vec<f64> = y[2 * n..].iter().zip(h).map(|(q, h)| q / h).collect();
        self.thickness_flux(h);
        let (dh, rest) = d.split_at_mut(n);
        let (dm, dq) = rest.split_at_mut(n);
        self.divergence(|k| self.flux[k], dh);
        self.divergence(|k| self.solute_flux(k, h, &c, self.pe_c), dm);
        self.divergence(|k| self.solute_flux(k, h, &f, self.pe_f), dq);
        for k in 0..n {
            dh[k] = -dh[k] - self.j[k] + self.pc * (c[k] - 1.0);
            dm[k] = -dm[k];
            dq[k] = -dq[k];
        }
    }
}

/// Solves the axisymmetric model on `opts.radial_cells` cells.
pub fn solve_radial(
    spec: &RadialEvaporation,
    nd: &NondimParams,
    ic: &InitialConditions,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    opts.validate()?;
    check_times(times)?;
    spec.validate()?;
    let start = std::time::Instant::now();
    let n = opts.radial_cells;
    let mut sys = Radial::new(n, spec, nd);
    let mut y0 = vec![1.0; 3 * n];
    y0[2 * n..].iter_mut().for_each(|v| *v = ic.f0);
    let mut lin = DenseLu::new(3 * n);
    let mut touchdown = None;
    let mut last = (0.0, 1.0);
    let out = bdf::integrate(
        &mut sys,
        &mut lin,
        0.0,
        &y0,
        times,
        &opts.bdf(),
        |_, t, y| {
            let min_h = y[..n].iter().copied().fold(f64::INFINITY, f64::min);
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
    let status = if touchdown.is_some() {
        SolveStatus::Touchdown
    } else {
        status_of(out.status)
    };
    let done = out.outputs.len();
    let states = times[..done]
        .iter()
        .zip(&out.outputs)
        .map(|(&t, y)| {
            let h = y[..n].to_vec();
            sys.thickness_flux(&h);
            let c = y[n..2 * n].iter().zip(&h).map(|(m, h)| m / h).collect();
            let f = y[2 * n..].iter().zip(&h).map(|(q, h)| q / h).collect();
            let u_bar = (0..n)
                .map(|k| 0.5 * (sys.flux[k] + sys.flux[k + 1]) / h[k])
                .collect();
            FieldState {
                t,
                shape: (1, n),
                c,
                f,
                p: sys.p.clone(),
                u_bar,
                v_bar: vec![0.0; n],
                h,
            }
        })
        .collect();
    let mut stats = SolveStats::default();
    stats.absorb(&out.stats, sys.evaluations);
    stats.wall_seconds = start.elapsed().as_secs_f64();
    Ok(SolveResult {
        times: times[..done].to_vec(),
        states,
        status,
        failed_at: (!status.is_success()).then_some(touchdown.unwrap_or(out.t)),
        x: sys.r.clone(),
        y: vec![0.0],
        stats,
    })
}

/// Disc quadrature 2π Σ r_j Δr u_j on the cell grid.
pub fn disc_integral(values: &[f64]) -> f64 {
    let n = values.len();
    let dr = R0 / n as f64;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| 2.0 * PI * (k as f64 + 0.5) * dr * dr * v)
        .sum()
}
