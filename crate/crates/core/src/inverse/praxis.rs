//! Brent's principal-axis method: line minimizations along a direction set
//! that is periodically replaced by the principal axes of a quadratic
//! model, with random steps when the problem looks ill-conditioned.

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optim::{Counted, OptimOutcome};

pub struct PraxisOptions {
    /// Absolute tolerance on x.
    pub x_tol: f64,
    pub f_tol: f64,
    /// Largest expected distance to the minimum.
    pub step: f64,
    /// Budget of line searches.
    pub max_iterations: usize,
    pub max_evaluations: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

struct Praxis<'a, 'b> {
    f: &'b mut Counted<'a>,
    n: usize,
    x: Vec<f64>,
    fx: f64,
    /// Column j of `v` is direction j.
    v: Vec<Vec<f64>>,
    d: Vec<f64>,
    q0: Vec<f64>,
    q1: Vec<f64>,
    qa: f64,
    qb: f64,
    qc: f64,
    qd0: f64,
    qd1: f64,
    qf1: f64,
    t: f64,
    h: f64,
    dmin: f64,
    ldt: f64,
    nl: usize,
    machep: f64,
    small: f64,
    history: Vec<f64>,
    budget_lines: usize,
    budget_evals: usize,
    tmp: Vec<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Praxis<'_, '_> {
    fn dir(&self, i: usize, j: usize) -> f64 {
        self.v[i][j]
    }

    fn out_of_budget(&self) -> bool {
        self.nl >= self.budget_lines || self.f.evaluations >= self.budget_evals
    }

    /// f along direction j, or along the quadratic curve through q0, x, q1.
    fn flin(&mut self, j: Option<usize>, l: f64) -> f64 {
        match j {
            Some(j) => {
                for i in 0..self.n {
                    self.tmp[i] = self.x[i] + l * self.dir(i, j);
                }
            }
            None => {
                let (d0, d1) = (self.qd0, self.qd1);
                self.qa = l * (l - d1) / (d0 * (d0 + d1));
                self.qb = (l + d0) * (d1 - l) / (d0 * d1);
                self.qc = l * (l + d0) / (d1 * (d0 + d1));
                for i in 0..self.n {
                    self.tmp[i] = self.qa * self.q0[i] + self.qb * self.x[i] + self.qc * self.q1[i];
                }
            }
        }
        let p = std::mem::take(&mut self.tmp);
        let v = self.f.eval(&p);
        self.tmp = p;
        v
    }

    /// One line minimization. `d2` carries the curvature estimate along the
    /// line, `x1` a trial step with known value `f1` when `fk`.
    fn minny(
        &mut self,
        j: Option<usize>,
        nits: usize,
        d2: &mut f64,
        x1: &mut f64,
        f1: f64,
        fk: bool,
    ) {
        let m2 = self.machep.sqrt();
        let m4 = m2.sqrt();
        let small = self.small;
        let sf1 = f1;
        let sx1 = *x1;
        let mut f1 = f1;
        let mut k = 0;
        let mut xm = 0.0;
        let f0 = self.fx;
        let mut fm = f0;
        let mut dz = *d2 < self.machep;

        let s = norm(&self.x);
        let temp = if dz { self.dmin } else { *d2 };
        let mut t2 = m4 * (f0.abs() / temp + s * self.ldt).sqrt() + m2 * self.ldt;
        let s = m4 * s + self.t;
        if dz && s < t2 {
            t2 = s;
        }
        t2 = t2.max(small).min(0.01 * self.h);
        if fk && f1 <= fm {
            xm = *x1;
            fm = f1;
        }
        if !fk || x1.abs() < t2 {
            *x1 = if *x1 >= 0.0 { t2 } else { -t2 };
            f1 = self.flin(j, *x1);
        }
        if f1 <= fm {
            xm = *x1;
            fm = f1;
        }

        let mut x2;
        let mut f2;
        'estimate: loop {
            if dz {
                x2 = if f0 < f1 { -*x1 } else { 2.0 * *x1 };
                f2 = self.flin(j, x2);
                if f2 <= fm {
                    xm = x2;
                    fm = f2;
                }
                *d2 = (x2 * (f1 - f0) - *x1 * (f2 - f0)) / ((*x1 * x2) * (*x1 - x2));
            }
            let d1 = (f1 - f0) / *x1 - *x1 * *d2;
            dz = true;
            x2 = if *d2 <= small {
                if d1 < 0.0 {
                    self.h
                } else {
                    -self.h
                }
            } else {
                -0.5 * d1 / *d2
            };
            if x2.abs() > self.h {
                x2 = self.h.copysign(x2);
            }
            loop {
                f2 = self.flin(j, x2);
                if k >= nits || f2 <= f0 {
                    break 'estimate;
                }
                k += 1;
                if f0 < f1 && *x1 * x2 > 0.0 {
                    continue 'estimate;
                }
                x2 *= 0.5;
            }
        }
        self.nl += 1;
        if f2 > fm {
            x2 = xm;
        } else {
            fm = f2;
        }
        if (x2 * (x2 - *x1)).abs() > small {
            *d2 = (x2 * (f1 - f0) - *x1 * (fm - f0)) / ((*x1 * x2) * (*x1 - x2));
        } else if k > 0 {
            *d2 = 0.0;
        }
        if *d2 <= small {
            *d2 = small;
        }
        *x1 = x2;
        self.fx = fm;
        if sf1 < self.fx {
            self.fx = sf1;
            *x1 = sx1;
        }
        if let Some(j) = j {
            for i in 0..self.n {
                self.x[i] += *x1 * self.v[i][j];
            }
        }
        self.history.push(self.f.best_f);
    }

    /// Line search along direction j with no prior trial point.
    fn search(&mut self, j: usize) -> f64 {
        let mut d2 = self.d[j];
        let mut s = 0.0;
        let fx = self.fx;
        self.minny(Some(j), 2, &mut d2, &mut s, fx, false);
        self.d[j] = d2;
        s
    }

    /// Extrapolates along the curve through the last three base points.
    fn quad(&mut self) {
        std::mem::swap(&mut self.fx, &mut self.qf1);
        self.qd1 = 0.0;
        for i in 0..self.n {
            let s = self.x[i];
            self.x[i] = self.q1[i];
            self.q1[i] = s;
            self.qd1 += (s - self.x[i]).powi(2);
        }
        self.qd1 = self.qd1.sqrt();
        let mut l = self.qd1;
        if self.qd0 <= 0.0 || self.qd1 <= 0.0 || self.nl < 3 * self.n * self.n {
            self.fx = self.qf1;
            self.qa = 0.0;
            self.qb = 0.0;
            self.qc = 1.0;
        } else {
            let mut s = 0.0;
            let qf1 = self.qf1;
            self.minny(None, 2, &mut s, &mut l, qf1, true);
            let (d0, d1) = (self.qd0, self.qd1);
            self.qa = l * (l - d1) / (d0 * (d0 + d1));
            self.qb = (l + d0) * (d1 - l) / (d0 * d1);
            self.qc = l * (l + d0) / (d1 * (d0 + d1));
        }
        self.qd0 = self.qd1;
        for i in 0..self.n {
            let s = self.q0[i];
            self.q0[i] = self.x[i];
            self.x[i] = self.qa * s + self.qb * self.x[i] + self.qc * self.q1[i];
        }
    }

    /// Replaces the directions by the principal axes of the quadratic
    /// model built from the curvature estimates.
    fn new_axes(&mut self) -> bool {
        let n = self.n;
        let vsmall = self.small * self.small;
        let large = 1.0 / self.small;
        let vlarge = 1.0 / vsmall;
        let mut dn: f64 = 0.0;
        for di in &mut self.d {
            *di = 1.0 / di.sqrt();
            dn = dn.max(*di);
        }
        let m = DMatrix::from_fn(n, n, |i, j| self.v[i][j] * self.d[j] / dn);
        let svd = m.svd(true, false);
        let Some(u) = svd.u else {
            return false;
        };
        let mut order: Vec<(f64, usize)> = svd
            .singular_values
            .iter()
            .enumerate()
            .map(|(k, &sigma)| {
                let s = dn * sigma;
                let curv = if s > large {
                    vsmall
                } else if s < self.small {
                    vlarge
                } else {
                    1.0 / (s * s)
                };
                (curv, k)
            })
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (col, &(curv, k)) in order.iter().enumerate() {
            self.d[col] = curv;
            for i in 0..n {
                self.v[i][col] = u[(i, k)];
            }
        }
        true
    }

    /// Returns whether the tolerance test was met before the budget ran out.
    fn run(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let n = self.n;
        let m2 = self.machep.sqrt();
        let ktm = 1;
        let mut kt: i32 = 0;
        let mut illc = false;
        let ldfac = 0.01;
        let mut t2 = self.t;
        if n == 1 {
            loop {
                let before = self.fx;
                self.d[0] = 0.0;
                self.search(0);
                if self.out_of_budget() {
                    return false;
                }
                if (before - self.fx).abs() <= self.t * (1.0 + self.fx.abs()) {
                    return true;
                }
            }
        }
        let mut z = vec![0.0; n];
        loop {
            let sf = self.d[0];
            self.d[0] = 0.0;
            let s = self.search(0);
            if s <= 0.0 {
                for i in 0..n {
                    self.v[i][0] = -self.v[i][0];
                }
            }
            if sf <= 0.9 * self.d[0] || self.d[0] <= 0.9 * sf {
                self.d[1..].iter_mut().for_each(|v| *v = 0.0);
            }
            if self.out_of_budget() {
                return false;
            }
            for k in 2..=n {
                let y = self.x.clone();
                let sf = self.fx;
                if kt > 0 {
                    illc = true;
                }
                let mut kl;
                loop {
                    kl = k;
                    let mut df = 0.0;
                    if illc {
                        for j in 0..n {
                            let r = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                            let s = (0.1 * self.ldt + t2 * 10f64.powi(kt)) * (r - 0.5);
                            z[j] = s;
                            for i in 0..n {
                                self.x[i] += s * self.v[i][j];
                            }
                        }
                        let x = self.x.clone();
                        self.fx = self.f.eval(&x);
                    }
                    for k2 in k..=n {
                        let sl = self.fx;
                        let s = self.search(k2 - 1);
                        let gain = if illc {
                            self.d[k2 - 1] * (s + z[k2 - 1]).powi(2)
                        } else {
                            sl - self.fx
                        };
                        if df <= gain {
                            df = gain;
                            kl = k2;
                        }
                        if self.out_of_budget() {
                            return false;
                        }
                    }
                    if illc || (100.0 * self.machep * self.fx).abs() <= df {
                        break;
                    }
                    illc = true;
                }
                for k2 in 1..k {
                    self.search(k2 - 1);
                    if self.out_of_budget() {
                        return false;
                    }
                }
                let f1 = self.fx;
                self.fx = sf;
                let mut lds = 0.0;
                for i in 0..n {
                    let sl = self.x[i];
                    self.x[i] = y[i];
                    z[i] = sl - y[i];
                    lds += z[i] * z[i];
                }
                lds = lds.sqrt();
                if lds > self.small {
                    // drop direction kl−1, shift, and put the net step at k−1
                    for j in (k..kl).rev() {
                        for i in 0..n {
                            self.v[i][j] = self.v[i][j - 1];
                        }
                        self.d[j] = self.d[j - 1];
                    }
                    self.d[k - 1] = 0.0;
                    for i in 0..n {
                        self.v[i][k - 1] = z[i] / lds;
                    }
                    let mut d2 = 0.0;
                    self.minny(Some(k - 1), 4, &mut d2, &mut lds, f1, true);
                    self.d[k - 1] = d2;
                    if lds <= 0.0 {
                        lds = -lds;
                        for i in 0..n {
                            self.v[i][k - 1] = -self.v[i][k - 1];
                        }
                    }
                }
                self.ldt = (ldfac * self.ldt).max(lds);
                t2 = m2 * norm(&self.x) + self.t;
                if 0.5 * t2 < self.ldt {
                    kt = -1;
                }
                kt += 1;
                if kt > ktm {
                    return true;
                }
                if self.out_of_budget() {
                    return false;
                }
            }
            self.quad();
            if !self.new_axes() {
                return false;
            }
            self.dmin = self.d[n - 1].max(self.small);
            illc = m2 * self.d[0] > self.dmin;
            if self.out_of_budget() {
                return false;
            }
        }
    }
}

pub fn praxis(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    o: &PraxisOptions,
) -> OptimOutcome {
    let n = x0.len();
    let mut f = Counted::new(objective);
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let machep = f64::EPSILON;
    let small = machep * machep;
    let mut history = Vec::new();
    let mut lines = 0;
    let mut restarts = 0;
    let mut start = x0.to_vec();
    let mut fstart = f.eval(x0);
    let converged = loop {
        let t = small + o.x_tol.abs();
        let h = o.step.max(100.0 * t);
        let mut p = Praxis {
            f: &mut f,
            n,
            x: start.clone(),
            fx: fstart,
            v: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            d: vec![0.0; n],
            q0: start.clone(),
            q1: start.clone(),
            qa: 0.0,
            qb: 0.0,
            qc: 0.0,
            qd0: 0.0,
            qd1: 0.0,
            qf1: fstart,
            t,
            h,
            dmin: small,
            ldt: h,
            nl: 0,
            machep,
            small,
            history: Vec::new(),
            budget_lines: o.max_iterations - lines,
            budget_evals: o.max_evaluations,
            tmp: vec![0.0; n],
        };
        let done = p.run(&mut rng);
        lines += p.nl;
        history.append(&mut p.history);
        let gained = fstart - f.best_f;
        if !done || lines >= o.max_iterations {
            break false;
        }
        if restarts >= o.max_restarts || gained.abs() <= o.f_tol.max(1e-14 * f.best_f.abs()) {
            break true;
        }
        // fresh axes from the best point
        restarts += 1;
        let (bx, bf) = best_so_far(&f);
        start = bx;
        fstart = bf;
    };
    let evaluations = f.evaluations;
    let (x, fbest) = f.best();
    OptimOutcome {
        x,
        f: fbest,
        iterations: lines,
        evaluations,
        history,
        converged,
        restarts,
    }
}

fn best_so_far(f: &Counted<'_>) -> (Vec<f64>, f64) {
    (f.best_x().to_vec(), f.best_f)
}
