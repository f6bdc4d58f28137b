//! Variable-order (1–5) backward differentiation with quasi-constant steps.
//!
//! The state is a modified divided-difference array `D`; step changes rescale
//! it in place. Orders above one use the κ-modified coefficients of the
//! numerical differentiation formulas, which enlarge the stability region
//! slightly over plain BDF.

use super::{scaled_rms, NewtonSolver, OdeSystem};

pub const MAX_ORDER: usize = 5;
const NEWTON_MAXITER: usize = 4;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const KAPPA: [f64; MAX_ORDER + 1] = [0.0, -0.1850, -1.0 / 9.0, -0.0823, -0.0415, 0.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdfOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub max_step: f64,
    pub first_step: Option<f64>,
}

impl Default for BdfOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-7,
            atol: 1e-9,
            max_steps: 50_000,
            max_step: f64::INFINITY,
            first_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdfStatus {
    Finished,
    StepUnderflow,
    MaxSteps,
    /// The step callback asked to stop.
    Stopped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BdfStats {
    pub steps: usize,
    pub rejected: usize,
    pub jacobians: usize,
    pub factorizations: usize,
    pub newton_iters: usize,
}

#[derive(Debug, Clone)]
pub struct BdfOutcome {
    pub status: BdfStatus,
    pub t: f64,
    /// Solutions at the requested times that were reached.
    pub outputs: Vec<Vec<f64>>,
    pub stats: BdfStats,
}

/// Returned by the per-step callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

struct Coefficients {
    gamma: [f64; MAX_ORDER + 1],
    alpha: [f64; MAX_ORDER + 1],
    error_const: [f64; MAX_ORDER + 2],
}

impl Coefficients {
    fn new() -> Self {
        let mut gamma = [0.0; MAX_ORDER + 1];
        for j in 1..=MAX_ORDER {
            gamma[j] = gamma[j - 1] + 1.0 / j as f64;
        }
        let mut alpha = [0.0; MAX_ORDER + 1];
        let mut error_const = [0.0; MAX_ORDER + 2];
        for j in 0..=MAX_ORDER {
            alpha[j] = (1.0 - KAPPA[j]) * gamma[j];
            error_const[j] = KAPPA[j] * gamma[j] + 1.0 / (j + 1) as f64;
        }
        error_const[MAX_ORDER + 1] = 1.0 / (MAX_ORDER + 2) as f64;
        Self {
            gamma,
            alpha,
            error_const,
        }
    }
}

/// Cumulative-product matrix relating differences at step ratio `factor`.
fn compute_r(order: usize, factor: f64) -> Vec<Vec<f64>> {
    let n = order + 1;
    let mut m = vec![vec![0.0; n]; n];
    for row in m[0].iter_mut() {
        *row = 1.0;
    }
    for i in 1..n {
        for j in 1..n {
            m[i][j] = (i as f64 - 1.0 - factor * j as f64) / i as f64;
        }
    }
    for i in 1..n {
        for j in 0..n {
            m[i][j] *= m[i - 1][j];
        }
    }
    m
}

fn change_d(d: &mut [Vec<f64>], order: usize, factor: f64) {
    let r = compute_r(order, factor);
    let u = compute_r(order, 1.0);
    let n = order + 1;
    let mut ru = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            ru[i][j] = (0..n).map(|k| r[i][k] * u[k][j]).sum();
        }
    }
    let len = d[0].len();
    let mut out = vec![vec![0.0; len]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, dk) in d.iter().take(n).enumerate() {
            let w = ru[k][i];
            if w != 0.0 {
                for (o, v) in row.iter_mut().zip(dk) {
                    *o += w * v;
                }
            }
        }
    }
    for (dst, src) in d.iter_mut().zip(out) {
        *dst = src;
    }
}

/// Dense output on the most recent step.
fn interpolate(t: f64, t_now: f64, h: f64, order: usize, d: &[Vec<f64>], out: &mut [f64]) {
    out.copy_from_slice(&d[0]);
    let mut p = 1.0;
    for j in 0..order {
        let shift = t_now - h * j as f64;
        p *= (t - shift) / (h * (j + 1) as f64);
        for (o, v) in out.iter_mut().zip(&d[j + 1]) {
            *o += p * v;
        }
    }
}

fn select_initial_step<S: OdeSystem + ?Sized>(
    sys: &mut S,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t_bound: f64,
    opts: &BdfOptions,
) -> f64 {
    let interval = (t_bound - t0).abs();
    if y0.is_empty() {
        return interval;
    }
    let scale: Vec<f64> = y0.iter().map(|y| opts.atol + y.abs() * opts.rtol).collect();
    let d0 = scaled_rms(y0, &scale);
    let d1 = scaled_rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let h0 = h0.min(interval);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    sys.rhs(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_rms(&diff, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).sqrt()
    };
    (100.0 * h0).min(h1).min(interval).min(opts.max_step)
}

/// Integrates from `t0` through the increasing times `t_eval`, returning the
/// solution at each. `on_step` sees every accepted step and may stop early.
pub fn integrate<S, L, F>(
    sys: &mut S,
    lin: &mut L,
    t0: f64,
    y0: &[f64],
    t_eval: &[f64],
    opts: &BdfOptions,
    mut on_step: F,
) -> BdfOutcome
where
    S: OdeSystem + ?Sized,
    L: NewtonSolver<S> + ?Sized,
    F: FnMut(&mut S, f64, &[f64]) -> Control,
{
    let n = y0.len();
    let coef = Coefficients::new();
    let mut stats = BdfStats::default();
    let mut outputs = Vec::with_capacity(t_eval.len());
    let mut next_out = 0;
    while next_out < t_eval.len() && t_eval[next_out] <= t0 {
        outputs.push(y0.to_vec());
        next_out += 1;
    }
    let t_bound = match t_eval.last() {
        Some(&t) if t > t0 => t,
        _ => {
            return BdfOutcome {
                status: BdfStatus::Finished,
                t: t0,
                outputs,
                stats,
            }
        }
    };

    if n == 0 {
        // nothing evolves; report the output times as steps
        for &t in &t_eval[next_out..] {
            if on_step(sys, t, y0) == Control::Stop {
                return BdfOutcome {
                    status: BdfStatus::Stopped,
                    t,
                    outputs,
                    stats,
                };
            }
            outputs.push(Vec::new());
        }
        return BdfOutcome {
            status: BdfStatus::Finished,
            t: t_bound,
            outputs,
            stats,
        };
    }

    let mut f = vec![0.0; n];
    sys.rhs(t0, y0, &mut f);
    let mut h_abs = match opts.first_step {
        Some(h) => h.min(t_bound - t0),
        None => select_initial_step(sys, t0, y0, &f, t_bound, opts),
    };
    let newton_tol = (10.0 * f64::EPSILON / opts.rtol).max(0.03f64.min(opts.rtol.sqrt()));

    let mut d = vec![vec![0.0; n]; MAX_ORDER + 3];
    d[0].copy_from_slice(y0);
    for (v, fi) in d[1].iter_mut().zip(&f) {
        *v = fi * h_abs;
    }
    let mut t = t0;
    let mut order = 1;
    let mut n_equal_steps = 0;
    lin.update_jacobian(sys, t0, y0, &f);
    stats.jacobians += 1;
    let mut factored = false;

    let mut y_predict = vec![0.0; n];
    let mut psi = vec![0.0; n];
    let mut scale = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut dsum = vec![0.0; n];
    let mut rhs_buf = vec![0.0; n];
    let mut dy = vec![0.0; n];
    let mut error = vec![0.0; n];

    let status = loop {
        if stats.steps >= opts.max_steps {
            break BdfStatus::MaxSteps;
        }
        let min_step = 10.0 * (next_up(t) - t).abs();
        if h_abs > opts.max_step {
            change_d(&mut d, order, opts.max_step / h_abs);
            h_abs = opts.max_step;
            n_equal_steps = 0;
        } else if h_abs < min_step {
            change_d(&mut d, order, min_step / h_abs);
            h_abs = min_step;
            n_equal_steps = 0;
        }

        let mut current_jac = false;
        let mut accepted = None;
        while accepted.is_none() {
            if h_abs < min_step {
                break;
            }
            let mut t_new = t + h_abs;
            if t_new > t_bound {
                t_new = t_bound;
                change_d(&mut d, order, (t_new - t).abs() / h_abs);
                n_equal_steps = 0;
                factored = false;
            }
            let h = t_new - t;
            h_abs = h.abs();

            y_predict.iter_mut().for_each(|v| *v = 0.0);
            for row in d.iter().take(order + 1) {
                for (p, v) in y_predict.iter_mut().zip(row) {
                    *p += v;
                }
            }
            for (s, y) in scale.iter_mut().zip(&y_predict) {
                *s = opts.atol + opts.rtol * y.abs();
            }
            psi.iter_mut().for_each(|v| *v = 0.0);
            for j in 1..=order {
                let g = coef.gamma[j] / coef.alpha[order];
                for (p, v) in psi.iter_mut().zip(&d[j]) {
                    *p += g * v;
                }
            }
            let c = h / coef.alpha[order];

            let mut converged = false;
            let mut n_iter = 0;
            loop {
                if !factored {
                    stats.factorizations += 1;
                    factored = lin.factor(sys, c);
                }
                if factored {
                    let r = newton(
                        sys,
                        lin,
                        t_new,
                        &y_predict,
                        c,
                        &psi,
                        &scale,
                        newton_tol,
                        (&mut y_new, &mut dsum, &mut rhs_buf, &mut dy, &mut f),
                    );
                    converged = r.0;
                    n_iter = r.1;
                    stats.newton_iters += n_iter;
                }
                if converged || current_jac {
                    break;
                }
                sys.rhs(t_new, &y_predict, &mut f);
                lin.update_jacobian(sys, t_new, &y_predict, &f);
                stats.jacobians += 1;
                factored = false;
                current_jac = true;
            }

            if !converged {
                h_abs *= 0.5;
                change_d(&mut d, order, 0.5);
                n_equal_steps = 0;
                factored = false;
                stats.rejected += 1;
                continue;
            }

            let safety =
                0.9 * (2 * NEWTON_MAXITER + 1) as f64 / (2 * NEWTON_MAXITER + n_iter) as f64;
            for (s, y) in scale.iter_mut().zip(&y_new) {
                *s = opts.atol + opts.rtol * y.abs();
            }
            for (e, v) in error.iter_mut().zip(&dsum) {
                *e = coef.error_const[order] * v;
            }
            let error_norm = scaled_rms(&error, &scale);
            if error_norm > 1.0 {
                let factor = MIN_FACTOR.max(safety * error_norm.powf(-1.0 / (order + 1) as f64));
                h_abs *= factor;
                change_d(&mut d, order, factor);
                n_equal_steps = 0;
                stats.rejected += 1;
            } else {
                accepted = Some((t_new, error_norm, safety));
            }
        }
        let Some((t_new, error_norm, safety)) = accepted else {
            break BdfStatus::StepUnderflow;
        };

        stats.steps += 1;
        n_equal_steps += 1;
        t = t_new;
        for k in 0..n {
            d[order + 2][k] = dsum[k] - d[order + 1][k];
            d[order + 1][k] = dsum[k];
        }
        for i in (0..=order).rev() {
            let (lo, hi) = d.split_at_mut(i + 1);
            for (a, b) in lo[i].iter_mut().zip(&hi[0]) {
                *a += b;
            }
        }

        if n_equal_steps >= order + 1 {
            let error_m_norm = if order > 1 {
                for (e, v) in error.iter_mut().zip(&d[order]) {
                    *e = coef.error_const[order - 1] * v;
                }
                scaled_rms(&error, &scale)
            } else {
                f64::INFINITY
            };
            let error_p_norm = if order < MAX_ORDER {
                for (e, v) in error.iter_mut().zip(&d[order + 2]) {
                    *e = coef.error_const[order + 1] * v;
                }
                scaled_rms(&error, &scale)
            } else {
                f64::INFINITY
            };
            let norms = [error_m_norm, error_norm, error_p_norm];
            let mut best = 0;
            let mut best_factor = f64::NEG_INFINITY;
            for (k, &e) in norms.iter().enumerate() {
                let fac = e.powf(-1.0 / (order + k) as f64);
                if fac > best_factor {
                    best_factor = fac;
                    best = k;
                }
            }
            order = order + best - 1;
            let factor = MAX_FACTOR.min(safety * best_factor);
            h_abs *= factor;
            change_d(&mut d, order, factor);
            n_equal_steps = 0;
            factored = false;
        }

        while next_out < t_eval.len() && t_eval[next_out] <= t {
            let mut y = vec![0.0; n];
            interpolate(t_eval[next_out], t, h_abs, order, &d, &mut y);
            if t_eval[next_out] == t {
                y.copy_from_slice(&y_new);
            }
            outputs.push(y);
            next_out += 1;
        }
        if on_step(sys, t, &y_new) == Control::Stop {
            break BdfStatus::Stopped;
        }
        if t >= t_bound {
            break BdfStatus::Finished;
        }
    };

    BdfOutcome {
        status,
        t,
        outputs,
        stats,
    }
}

type Work<'a> = (
    &'a mut Vec<f64>,
    &'a mut Vec<f64>,
    &'a mut Vec<f64>,
    &'a mut Vec<f64>,
    &'a mut Vec<f64>,
);

/// Simplified Newton iteration for one implicit step. Returns (converged, iterations).
#[allow(clippy::too_many_arguments)]
fn newton<S, L>(
    sys: &mut S,
    lin: &mut L,
    t_new: f64,
    y_predict: &[f64],
    c: f64,
    psi: &[f64],
    scale: &[f64],
    tol: f64,
    work: Work<'_>,
) -> (bool, usize)
where
    S: OdeSystem + ?Sized,
    L: NewtonSolver<S> + ?Sized,
{
    let (y, d, rhs, dy, f) = work;
    y.copy_from_slice(y_predict);
    d.iter_mut().for_each(|v| *v = 0.0);
    let mut dy_norm_old: Option<f64> = None;
    let mut converged = false;
    let mut k = 0;
    while k < NEWTON_MAXITER {
        sys.rhs(t_new, y, f);
        if !f.iter().all(|v| v.is_finite()) {
            break;
        }
        for i in 0..rhs.len() {
            rhs[i] = c * f[i] - psi[i] - d[i];
        }
        if !lin.solve(sys, rhs, dy) || !dy.iter().all(|v| v.is_finite()) {
            break;
        }
        let dy_norm = scaled_rms(dy, scale);
        let rate = dy_norm_old.map(|old| dy_norm / old);
        if let Some(rate) = rate {
            if rate >= 1.0 || rate.powi((NEWTON_MAXITER - k) as i32) / (1.0 - rate) * dy_norm > tol
            {
                break;
            }
        }
        for i in 0..y.len() {
            y[i] += dy[i];
            d[i] += dy[i];
        }
        if dy_norm == 0.0 || rate.is_some_and(|r| r / (1.0 - r) * dy_norm < tol) {
            converged = true;
            break;
        }
        dy_norm_old = Some(dy_norm);
        k += 1;
    }
    (converged, (k + 1).min(NEWTON_MAXITER))
}

fn next_up(t: f64) -> f64 {
    if t.is_nan() || t == f64::INFINITY {
        return t;
    }
    if t == 0.0 {
        return f64::from_bits(1);
    }
    let bits = t.to_bits();
    if t > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::dense::DenseLu;

    struct Linear {
        lambda: f64,
    }

    impl OdeSystem for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&mut self, _t: f64, y: &[f64], dydt: &mut [f64]) {
            dydt[0] = self.lambda * y[0];
        }
    }

    /// Robertson chemical kinetics, the classic stiff benchmark.
    struct Robertson;

    impl OdeSystem for Robertson {
        fn dim(&self) -> usize {
            3
        }
        fn rhs(&mut self, _t: f64, y: &[f64], f: &mut [f64]) {
            f[0] = -0.04 * y[0] + 1e4 * y[1] * y[2];
            f[2] = 3e7 * y[1] * y[1];
            f[1] = -f[0] - f[2];
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let mut sys = Linear { lambda: -2.0 };
        let mut lin = DenseLu::new(1);
        let ts = [0.25, 0.5, 1.0, 2.0];
        let opts = BdfOptions {
            rtol: 1e-9,
            atol: 1e-12,
            ..Default::default()
        };
        let out = integrate(&mut sys, &mut lin, 0.0, &[1.0], &ts, &opts, |_, _, _| {
            Control::Continue
        });
        assert_eq!(out.status, BdfStatus::Finished);
        for (y, t) in out.outputs.iter().zip(ts) {
            assert!((y[0] - (-2.0 * t).exp()).abs() < 1e-7, "{t}: {}", y[0]);
        }
    }

    #[test]
    fn robertson_is_solved_with_few_steps() {
        let mut sys = Robertson;
        let mut lin = DenseLu::new(3);
        let opts = BdfOptions {
            rtol: 1e-6,
            atol: 1e-10,
            ..Default::default()
        };
        let out = integrate(
            &mut sys,
            &mut lin,
            0.0,
            &[1.0, 0.0, 0.0],
            &[40.0, 1e5],
            &opts,
            |_, _, _| Control::Continue,
        );
        assert_eq!(out.status, BdfStatus::Finished);
        // reference at t = 40 from a tight-tolerance stiff solve
        let y = &out.outputs[0];
        assert!((y[0] - 0.7158270687).abs() < 1e-5);
        assert!((y[2] - 0.2841637457).abs() < 1e-5);
        let total: f64 = out.outputs[1].iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(out.stats.steps < 1000);
    }

    #[test]
    fn callback_can_stop() {
        let mut sys = Linear { lambda: -1.0 };
        let mut lin = DenseLu::new(1);
        let out = integrate(
            &mut sys,
            &mut lin,
            0.0,
            &[1.0],
            &[10.0],
            &BdfOptions::default(),
            |_, t, _| {
                if t > 1.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        assert_eq!(out.status, BdfStatus::Stopped);
        assert!(out.outputs.is_empty());
    }

    #[test]
    fn difference_rescaling_is_exact_for_polynomials() {
        // D for y = t² at spacing 1 ending at t = 3, order 2
        let y = |t: f64| t * t;
        let mut d = vec![
            vec![y(3.0)],
            vec![y(3.0) - y(2.0)],
            vec![y(3.0) - 2.0 * y(2.0) + y(1.0)],
        ];
        change_d(&mut d, 2, 0.5);
        assert!((d[0][0] - 9.0).abs() < 1e-14);
        assert!((d[1][0] - (y(3.0) - y(2.5))).abs() < 1e-14);
        assert!((d[2][0] - (y(3.0) - 2.0 * y(2.5) + y(2.0))).abs() < 1e-14);
    }
}
