//! Nelder–Mead with coefficients (1, 2, ½, ½) and restarts after collapse.

use super::optim::{Counted, OptimOutcome};

pub struct NelderMeadOptions {
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iterations: usize,
    pub max_evaluations: usize,
    pub initial_step: f64,
    pub max_restarts: usize,
    /// Objective values at or above this are treated as infeasible.
    pub penalty: f64,
}

fn simplex_around(
    f: &mut Counted<'_>,
    x0: &[f64],
    f0: f64,
    step: f64,
    penalty: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x0.len();
    let mut pts = vec![x0.to_vec()];
    let mut vals = vec![f0];
    for i in 0..n {
        let mut h = step * x0[i].abs().max(1.0);
        let mut x = x0.to_vec();
        x[i] += h;
        let mut v = f.eval(&x);
        // pull infeasible vertices back toward the base point, then try the other side
        for attempt in 0..12 {
            if v < penalty {
                break;
            }
            h = if attempt == 5 {
                -step * x0[i].abs().max(1.0)
            } else {
                0.5 * h
            };
            x[i] = x0[i] + h;
            v = f.eval(&x);
        }
        pts.push(x);
        vals.push(v);
    }
    (pts, vals)
}

fn order(pts: &mut Vec<Vec<f64>>, vals: &mut Vec<f64>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    *pts = idx.iter().map(|&k| pts[k].clone()).collect();
    *vals = idx.iter().map(|&k| vals[k]).collect();
}

fn collapsed(pts: &[Vec<f64>], vals: &[f64], x_tol: f64, f_tol: f64) -> bool {
    let spread_x = pts[1..]
        .iter()
        .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let spread_f = vals[vals.len() - 1] - vals[0];
    spread_x <= x_tol && spread_f <= f_tol
}

pub fn nelder_mead(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    o: &NelderMeadOptions,
) -> OptimOutcome {
    let n = x0.len();
    let mut f = Counted::new(objective);
    let mut iterations = 0;
    let mut restarts = 0;
    let mut history = Vec::new();
    let f0 = f.eval(x0);
    let (mut pts, mut vals) = simplex_around(&mut f, x0, f0, o.initial_step, o.penalty);
    let mut run_start_best = f64::INFINITY;
    let mut converged = false;
    let scale = 1.0 / n as f64;

    loop {
        order(&mut pts, &mut vals);
        if collapsed(&pts, &vals, o.x_tol, o.f_tol) {
            // a restart that gains nothing confirms the minimum
            let gained = run_start_best - vals[0];
            if restarts >= o.max_restarts || gained.abs() <= o.f_tol.max(1e-14 * vals[0].abs()) {
                converged = true;
                break;
            }
            restarts += 1;
            run_start_best = vals[0];
            let best = pts[0].clone();
            (pts, vals) = simplex_around(&mut f, &best, vals[0], o.initial_step, o.penalty);
            continue;
        }
        if iterations >= o.max_iterations || f.evaluations >= o.max_evaluations {
            break;
        }
        iterations += 1;

        let mut c = vec![0.0; n];
        for p in &pts[..n] {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += scale * pi;
            }
        }
        let worst = pts[n].clone();
        let along = |t: f64| -> Vec<f64> {
            c.iter()
                .zip(&worst)
                .map(|(ci, wi)| ci + t * (ci - wi))
                .collect()
        };

        let xr = along(1.0);
        let fr = f.eval(&xr);
        let mut shrink = false;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = f.eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else if fr < vals[n] {
            let xc = along(0.5);
            let fc = f.eval(&xc);
            if fc <= fr {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                shrink = true;
            }
        } else {
            let xc = along(-0.5);
            let fc = f.eval(&xc);
            if fc < vals[n] {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                shrink = true;
            }
        }
        if shrink {
            let best = pts[0].clone();
            for k in 1..=n {
                for (p, b) in pts[k].iter_mut().zip(&best) {
                    *p = b + 0.5 * (*p - b);
                }
                vals[k] = f.eval(&pts[k]);
            }
        }
        history.push(f.best_f);
    }
    let evaluations = f.evaluations;
    let (x, fbest) = f.best();
    OptimOutcome {
        x,
        f: fbest,
        iterations,
        evaluations,
        history,
        converged,
        restarts,
    }
}
