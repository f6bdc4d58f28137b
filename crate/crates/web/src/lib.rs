//! Small wasm-bindgen surface for the static demo page in `www/`.
//!
//! Each export has a plain Rust twin so the logic is testable natively.

use tearfilm::evaporation::{EllipticPeak, EvaporationSpec};
use tearfilm::forward::uniform_ode_oracle;
use tearfilm::preprocess::{window_weight, WindowParams};
use tearfilm::{intensity_at, normalization_coefficient, Grid2D, InitialConditions, NondimParams};
use wasm_bindgen::prelude::*;

/// J on an n×n periodic grid, row-major, followed by its periodicity defect.
#[allow(clippy::too_many_arguments)]
pub fn ellipse_field(
    n: usize,
    v_b: f64,
    a: f64,
    fx: f64,
    fy: f64,
    x0: f64,
    y0: f64,
    e: f64,
    beta: f64,
) -> Result<Vec<f64>, String> {
    let grid = Grid2D::square(n).map_err(|e| e.to_string())?;
    let spec = EvaporationSpec::single_ellipse(
        v_b,
        EllipticPeak {
            x0,
            y0,
            fx,
            fy,
            e,
            a,
            beta,
        },
    );
    let j = spec.compile().map_err(|e| e.to_string())?;
    let mut out = j.sample(&grid);
    out.push(j.periodicity_defect());
    Ok(out)
}

/// Rows of (t, h, c, f, I) for spatially uniform evaporation `j`; stops at
/// touchdown.
pub fn uniform_thinning(
    j: f64,
    f0: f64,
    pc: f64,
    t_end: f64,
    count: usize,
) -> Result<Vec<f64>, String> {
    if !(t_end > 0.0) || count < 2 {
        return Err("need t_end > 0 and at least 2 samples".into());
    }
    let nd = NondimParams::default().with_pc(pc);
    let ic = InitialConditions::new(f0).map_err(|e| e.to_string())?;
    let i0 = normalization_coefficient(f0, nd.phi).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..count)
        .map(|k| t_end * k as f64 / (count - 1) as f64)
        .collect();
    let tr = uniform_ode_oracle(j, &nd, &ic, &times);
    let mut out = Vec::with_capacity(5 * tr.times.len());
    for k in 0..tr.times.len() {
        out.extend([
            tr.times[k],
            tr.h[k],
            tr.c[k],
            tr.f[k],
            intensity_at(tr.h[k], tr.f[k], i0, nd.phi),
        ]);
    }
    Ok(out)
}

/// The tanh window I₂ sampled on an n×n pixel grid spanning [−π, π]².
pub fn window_grid(n: usize, a: f64, b: f64, k: f64) -> Result<Vec<f64>, String> {
    if n < 2 || !(a < b) || !(k > 0.0) {
        return Err("need n >= 2, a < b and k > 0".into());
    }
    let w = WindowParams { a, b, k };
    let at =
        |p: usize| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * p as f64 / (n - 1) as f64;
    Ok((0..n * n)
        .map(|q| window_weight(at(q % n), at(q / n), &w))
        .collect())
}

#[wasm_bindgen(js_name = ellipseField)]
#[allow(clippy::too_many_arguments)]
pub fn js_ellipse_field(
    n: usize,
    v_b: f64,
    a: f64,
    fx: f64,
    fy: f64,
    x0: f64,
    y0: f64,
    e: f64,
    beta: f64,
) -> Result<Vec<f64>, JsError> {
    ellipse_field(n, v_b, a, fx, fy, x0, y0, e, beta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = uniformThinning)]
pub fn js_uniform_thinning(
    j: f64,
    f0: f64,
    pc: f64,
    t_end: f64,
    count: usize,
) -> Result<Vec<f64>, JsError> {
    uniform_thinning(j, f0, pc, t_end, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = windowGrid)]
pub fn js_window_grid(n: usize, a: f64, b: f64, k: f64) -> Result<Vec<f64>, JsError> {
    window_grid(n, a, b, k).map_err(|e| JsError::new(&e))
}
