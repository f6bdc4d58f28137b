//! Dormand–Prince 5(4) with PI-free standard step control.

use super::OdeSystem;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone)]
pub struct DopriResult {
    pub t: f64,
    pub y: Vec<f64>,
    pub steps: usize,
    /// False if the step size collapsed before reaching the end.
    pub completed: bool,
}

/// Integrates to `t_end`, stopping early (and reporting the time) the first
/// step after which `stop(y)` holds.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &mut S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    tol: f64,
    mut stop: impl FnMut(&[f64]) -> bool,
) -> DopriResult {
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut h = (1e-3 * (t_end - t0)).max(1e-12);
    let mut steps = 0;
    sys.rhs(t, &y, &mut k[0]);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().take(s).enumerate() {
                    acc += h * A[s][j] * kj[i];
                }
                ytmp[i] = acc;
            }
            sys.rhs(t + C[s] * h, &ytmp, &mut k[s]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            ynew[i] = y[i] + h * (0..7).map(|s| B[s] * k[s][i]).sum::<f64>();
            let e = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let sc = tol + tol * y[i].abs().max(ynew[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.25;
        } else if err <= 1.0 {
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            // first-same-as-last
            let last = k[6].clone();
            k[0] = last;
            steps += 1;
            if stop(&y) {
                return DopriResult {
                    t,
                    y,
                    steps,
                    completed: true,
                };
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return DopriResult {
                t,
                y,
                steps,
                completed: false,
            };
        }
    }
    DopriResult {
        t,
        y,
        steps,
        completed: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&mut self, _t: f64, y: &[f64], f: &mut [f64]) {
            f[0] = y[1];
            f[1] = -y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_to_high_accuracy() {
        let r = integrate(&mut Oscillator, 0.0, &[1.0, 0.0], 10.0, 1e-11, |_| false);
        assert!(r.completed);
        assert!((r.t - 10.0).abs() < 1e-14);
        assert!((r.y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((r.y[1] + 10f64.sin()).abs() < 1e-8);
    }
}
