use super::{NewtonSolver, OdeSystem};

/// Systems that can approximately invert their own Newton matrix.
pub trait Preconditioned: OdeSystem {
    /// Called whenever the linearization point moves.
    fn setup_preconditioner(&mut self, t: f64, y: &[f64]);
    /// Approximately solves (I − c J) x = b.
    fn precondition(&mut self, c: f64, b: &[f64], x: &mut [f64]);
}

/// Right-preconditioned GMRES with finite-difference Jacobian-vector products.
#[derive(Debug, Clone)]
pub struct Gmres {
    pub rtol: f64,
    pub max_iter: usize,
    t_ref: f64,
    y_ref: Vec<f64>,
    f_ref: Vec<f64>,
    y_norm: f64,
    c: f64,
    v: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    w: Vec<f64>,
    ypert: Vec<f64>,
    /// Krylov iterations summed over all solves.
    pub iterations: usize,
    pub solves: usize,
}

impl Gmres {
    pub fn new(n: usize, rtol: f64, max_iter: usize) -> Self {
        Self {
            rtol,
            max_iter,
            t_ref: 0.0,
            y_ref: vec![0.0; n],
            f_ref: vec![0.0; n],
            y_norm: 0.0,
            c: 0.0,
            v: Vec::new(),
            z: Vec::new(),
            w: vec![0.0; n],
            ypert: vec![0.0; n],
            iterations: 0,
            solves: 0,
        }
    }

    /// w = (I − cJ) x.
    fn apply<S: OdeSystem + ?Sized>(&mut self, sys: &mut S, x: &[f64], out: &mut [f64]) {
        let xn = dot(x, x).sqrt();
        if xn == 0.0 {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let sigma = f64::EPSILON.sqrt() * (1.0 + self.y_norm) / xn;
        for ((p, y), v) in self.ypert.iter_mut().zip(&self.y_ref).zip(x) {
            *p = y + sigma * v;
        }
        sys.rhs(self.t_ref, &self.ypert, out);
        let c = self.c;
        for ((o, f0), v) in out.iter_mut().zip(&self.f_ref).zip(x) {
            *o = v - c * (*o - f0) / sigma;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<S: Preconditioned + ?Sized> NewtonSolver<S> for Gmres {
    fn update_jacobian(&mut self, sys: &mut S, t: f64, y: &[f64], f: &[f64]) {
        self.t_ref = t;
        self.y_ref.copy_from_slice(y);
        self.f_ref.copy_from_slice(f);
        self.y_norm = dot(y, y).sqrt();
        sys.setup_preconditioner(t, y);
    }

    fn factor(&mut self, _sys: &mut S, c: f64) -> bool {
        self.c = c;
        true
    }

    fn solve(&mut self, sys: &mut S, b: &[f64], x: &mut [f64]) -> bool {
        self.solves += 1;
        let n = b.len();
        let m = self.max_iter;
        x.iter_mut().for_each(|v| *v = 0.0);
        let beta = dot(b, b).sqrt();
        if beta == 0.0 {
            return true;
        }
        if self.v.len() < m + 1 {
            self.v.resize_with(m + 1, || vec![0.0; n]);
            self.z.resize_with(m, || vec![0.0; n]);
        }
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        for (vi, bi) in self.v[0].iter_mut().zip(b) {
            *vi = bi / beta;
        }
        let mut k_used = 0;
        for j in 0..m {
            let mut zj = std::mem::take(&mut self.z[j]);
            sys.precondition(self.c, &self.v[j], &mut zj);
            let mut w = std::mem::take(&mut self.w);
            self.apply(sys, &zj, &mut w);
            self.z[j] = zj;
            for i in 0..=j {
                let hij = dot(&w, &self.v[i]);
                hess[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&self.v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = dot(&w, &w).sqrt();
            hess[j + 1][j] = hn;
            for i in 0..j {
                let a = hess[i][j];
                let bb = hess[i + 1][j];
                hess[i][j] = cs[i] * a + sn[i] * bb;
                hess[i + 1][j] = -sn[i] * a + cs[i] * bb;
            }
            let a = hess[j][j];
            let bb = hess[j + 1][j];
            let r = a.hypot(bb);
            if r == 0.0 {
                self.w = w;
                break;
            }
            cs[j] = a / r;
            sn[j] = bb / r;
            hess[j][j] = r;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            k_used = j + 1;
            self.iterations += 1;
            let done = g[j + 1].abs() <= self.rtol * beta || hn == 0.0;
            if !done && j + 1 < m {
                for (vk, wk) in self.v[j + 1].iter_mut().zip(&w) {
                    *vk = wk / hn;
                }
            }
            self.w = w;
            if done {
                break;
            }
        }
        if k_used == 0 {
            return false;
        }
        let mut yk = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|l| hess[i][l] * yk[l]).sum();
            yk[i] = (g[i] - s) / hess[i][i];
        }
        for (i, &coef) in yk.iter().enumerate() {
            for (xk, zk) in x.iter_mut().zip(&self.z[i]) {
                *xk += coef * zk;
            }
        }
        x.iter().all(|v| v.is_finite())
    }
}
