//! Spatially uniform reduction of the film model, integrated explicitly.

use serde::{Deserialize, Serialize};

use crate::grid::InitialConditions;
use crate::ode::{dopri, OdeSystem};
use crate::params::NondimParams;

const TOLERANCE: f64 = 1e-10;
const H_STOP: f64 = 1e-6;

struct Uniform {
    j: f64,
    pc: f64,
}

impl OdeSystem for Uniform {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&mut self, _t: f64, y: &[f64], d: &mut [f64]) {
        let (h, c, f) = (y[0], y[1], y[2]);
        let osm = self.pc * (c - 1.0);
        d[0] = -self.j + osm;
        d[1] = (self.j * c - osm * c) / h;
        d[2] = (self.j * f - osm * f) / h;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformTrajectory {
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
    /// Time at which h reaches zero, if before the last requested time.
    pub touchdown: Option<f64>,
}

/// Integrates the uniform system with constant evaporation `j` and reports
/// the state at each of `times` reached before touchdown.
pub fn uniform_ode_oracle(
    j: f64,
    nd: &NondimParams,
    ic: &InitialConditions,
    times: &[f64],
) -> UniformTrajectory {
    let mut sys = Uniform { j, pc: nd.pc };
    let mut out = UniformTrajectory {
        times: Vec::new(),
        h: Vec::new(),
        c: Vec::new(),
        f: Vec::new(),
        touchdown: None,
    };
    let mut t = 0.0;
    let mut y = vec![1.0, 1.0, ic.f0];
    for &target in times {
        if target > t {
            let r = dopri::integrate(&mut sys, t, &y, target, TOLERANCE, |y| y[0] < H_STOP);
            if r.y[0] < H_STOP || !r.completed {
                let mut d = [0.0; 3];
                sys.rhs(r.t, &r.y, &mut d);
                let extra = if d[0] < 0.0 { r.y[0] / -d[0] } else { 0.0 };
                out.touchdown = Some(r.t + extra);
                return out;
            }
            t = r.t;
            y = r.y;
        }
        out.times.push(target);
        out.h.push(y[0]);
        out.c.push(y[1]);
        out.f.push(y[2]);
    }
    out
}
