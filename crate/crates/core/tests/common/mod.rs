#![allow(dead_code)]

use tearfilm::forward::SolverOptions;
use tearfilm::*;

/// Tilted ellipse used throughout the solver tests.
pub fn reference_ellipse() -> EvaporationSpec {
    EvaporationSpec::single_ellipse(
        0.07,
        EllipticPeak {
            x0: 0.0,
            y0: 0.0,
            fx: 0.5,
            fy: 0.5,
            e: 0.9,
            a: 0.8,
            beta: 0.5,
        },
    )
}

pub fn tight(grid: usize) -> SolverOptions {
    SolverOptions {
        grid,
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        ..Default::default()
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Frozen solution of the uniform system h' = −J + Pc(c − 1), (hc)' = 0,
/// (hf)' = 0 with Pc = 0.39204, from an independent adaptive RK solve
/// (rtol 1e-13). Rows: (J, f0, t, h, c, f).
pub const UNIFORM_ORACLE: [(f64, f64, f64, f64, f64, f64); 4] = [
    (
        0.3,
        1.0,
        0.5,
        0.8651216997635295,
        1.1559067357498503,
        1.1559067357498503,
    ),
    (
        0.3,
        1.0,
        1.0,
        0.7612517677040691,
        1.3136258494558182,
        1.3136258494558182,
    ),
    (
        0.07,
        0.5,
        0.5,
        0.968284165828567,
        1.0327546760452033,
        0.5163773380226017,
    ),
    (
        0.07,
        0.5,
        1.0,
        0.9425432288580785,
        1.0609592954283171,
        0.5304796477141586,
    ),
];
