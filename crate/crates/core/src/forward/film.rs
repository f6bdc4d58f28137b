//! Collocation right-hand sides of the periodic film model.
//!
//! Stage 1 advances h and the solute content m = h c; stage 2 advances the
//! dye content q = h f over a prescribed thickness history. Written in these
//! variables the solute equations are pure divergences, so the integrals of
//! h c and h f are linear invariants of the discrete system.

use rustfft::num_complex::Complex64;

use crate::ode::krylov::Preconditioned;
use crate::ode::OdeSystem;
use crate::spectral::Spectral2D;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Shared transforms and scratch space.
struct Work {
    sp: Spectral2D,
    z: Vec<Complex64>,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    w: Vec<Complex64>,
    w2: Vec<Complex64>,
}

impl Work {
    fn new(nx: usize, ny: usize, dealias: bool) -> Self {
        let n = nx * ny;
        let zero = vec![Complex64::default(); n];
        Self {
            sp: Spectral2D::new(nx, ny, dealias),
            z: zero.clone(),
            a: zero.clone(),
            b: zero.clone(),
            w: zero.clone(),
            w2: zero,
        }
    }

    fn n(&self) -> usize {
        self.sp.len()
    }

    /// Spectra of two real fields into `a`, `b` (filtered).
    fn spectra(&mut self, u: &[f64], v: &[f64]) {
        Spectral2D::pack(u, v, &mut self.z);
        self.sp.forward(&mut self.z);
        self.sp.unpack(&self.z, &mut self.a, &mut self.b);
        self.sp.filter(&mut self.a);
        self.sp.filter(&mut self.b);
    }

    /// ∇ of the field whose spectrum is in `src`, scaled by `extra(k)`,
    /// returned as (x-part, y-part).
    fn gradient(&mut self, use_a: bool, biharmonic: bool, gx: &mut [f64], gy: &mut [f64]) {
        let nx = self.sp.nx();
        let ny = self.sp.ny();
        let src = if use_a { &self.a } else { &self.b };
        for i in 0..ny {
            for j in 0..nx {
                let k = i * nx + j;
                let s = if biharmonic { -self.sp.k2(i, j) } else { 1.0 };
                let u = src[k] * s;
                self.w[k] = I * self.sp.kx(j) * u + I * (I * self.sp.ky(i) * u);
            }
        }
        self.sp.inverse(&mut self.w);
        for ((x, y), z) in gx.iter_mut().zip(gy.iter_mut()).zip(&self.w) {
            *x = z.re;
            *y = z.im;
        }
    }

    /// Spectrum of ∇·(vx, vy) into `w2` (or into the imaginary slot when `second`).
    fn divergence_spectrum(&mut self, vx: &[f64], vy: &[f64], second: bool) {
        self.spectra(vx, vy);
        let nx = self.sp.nx();
        let ny = self.sp.ny();
        for i in 0..ny {
            for j in 0..nx {
                let k = i * nx + j;
                let d = I * self.sp.kx(j) * self.a[k] + I * self.sp.ky(i) * self.b[k];
                if second {
                    self.w2[k] += I * d;
                } else {
                    self.w2[k] = d;
                }
            }
        }
    }
}

/// Thickness and solute content with prescribed evaporation.
pub struct Stage1 {
    work: Work,
    j: Vec<f64>,
    pc: f64,
    pe_c: f64,
    c: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    cx: Vec<f64>,
    cy: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    qx: Vec<f64>,
    qy: Vec<f64>,
    pre_m: f64,
    pre_c: f64,
    pre_h: f64,
    pub evaluations: usize,
}

impl Stage1 {
    pub fn new(nx: usize, ny: usize, j: Vec<f64>, pc: f64, pe_c: f64, dealias: bool) -> Self {
        let n = nx * ny;
        assert_eq!(j.len(), n);
        let v = vec![0.0; n];
        Self {
            work: Work::new(nx, ny, dealias),
            j,
            pc,
            pe_c,
            c: v.clone(),
            gx: v.clone(),
            gy: v.clone(),
            cx: v.clone(),
            cy: v.clone(),
            fx: v.clone(),
            fy: v.clone(),
            qx: v.clone(),
            qy: v,
            pre_m: 1.0 / 12.0,
            pre_c: 1.0,
            pre_h: 1.0,
            evaluations: 0,
        }
    }

    pub fn points(&self) -> usize {
        self.work.n()
    }

    /// Flux h ū = (h³/12) ∇Δh and the pressure p = −Δh.
    pub fn diagnostics(&mut self, h: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.work.n();
        let zeros = vec![0.0; n];
        self.work.spectra(h, &zeros);
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        self.work.gradient(true, true, &mut gx, &mut gy);
        let nx = self.work.sp.nx();
        for i in 0..self.work.sp.ny() {
            for jj in 0..nx {
                let k = i * nx + jj;
                self.work.w[k] = self.work.a[k] * self.work.sp.k2(i, jj);
            }
        }
        self.work.sp.inverse(&mut self.work.w);
        let p: Vec<f64> = self.work.w.iter().map(|z| z.re).collect();
        let fx = h
            .iter()
            .zip(&gx)
            .map(|(h, g)| h * h * h / 12.0 * g)
            .collect();
        let fy = h
            .iter()
            .zip(&gy)
            .map(|(h, g)| h * h * h / 12.0 * g)
            .collect();
        (p, fx, fy)
    }
}

impl OdeSystem for Stage1 {
    fn dim(&self) -> usize {
        2 * self.work.n()
    }

    fn rhs(&mut self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        self.evaluations += 1;
        let n = self.work.n();
        let (h, m) = y.split_at(n);
        for ((c, m), h) in self.c.iter_mut().zip(m).zip(h) {
            *c = m / h;
        }
        self.work.spectra(h, &self.c);
        self.work.gradient(true, true, &mut self.gx, &mut self.gy);
        self.work.gradient(false, false, &mut self.cx, &mut self.cy);
        let inv_pe = 1.0 / self.pe_c;
        for k in 0..n {
            let h3 = h[k] * h[k] * h[k] / 12.0;
            self.fx[k] = h3 * self.gx[k];
            self.fy[k] = h3 * self.gy[k];
            self.qx[k] = self.c[k] * self.fx[k] - inv_pe * h[k] * self.cx[k];
            self.qy[k] = self.c[k] * self.fy[k] - inv_pe * h[k] * self.cy[k];
        }
        let (fx, fy) = (std::mem::take(&mut self.fx), std::mem::take(&mut self.fy));
        self.work.divergence_spectrum(&fx, &fy, false);
        let (qx, qy) = (std::mem::take(&mut self.qx), std::mem::take(&mut self.qy));
        self.work.divergence_spectrum(&qx, &qy, true);
        self.fx = fx;
        self.fy = fy;
        self.qx = qx;
        self.qy = qy;
        self.work.sp.inverse(&mut self.work.w2);
        let (dh, dm) = dydt.split_at_mut(n);
        for k in 0..n {
            let z = self.work.w2[k];
            dh[k] = -z.re - self.j[k] + self.pc * (self.c[k] - 1.0);
            dm[k] = -z.im;
        }
    }
}

impl Preconditioned for Stage1 {
    fn setup_preconditioner(&mut self, _t: f64, y: &[f64]) {
        let n = self.work.n();
        let (h, m) = y.split_at(n);
        let nf = n as f64;
        self.pre_h = h.iter().sum::<f64>() / nf;
        self.pre_m = h.iter().map(|h| h * h * h).sum::<f64>() / nf / 12.0;
        self.pre_c = m.iter().zip(h).map(|(m, h)| m / h).sum::<f64>() / nf;
    }

    fn precondition(&mut self, c: f64, b: &[f64], x: &mut [f64]) {
        let n = self.work.n();
        let (bh, bm) = b.split_at(n);
        Spectral2D::pack(bh, bm, &mut self.work.z);
        self.work.sp.forward(&mut self.work.z);
        self.work
            .sp
            .unpack(&self.work.z, &mut self.work.a, &mut self.work.b);
        let nx = self.work.sp.nx();
        let inv_pe = 1.0 / self.pe_c;
        let (mm, cb, hb) = (self.pre_m, self.pre_c, self.pre_h);
        for i in 0..self.work.sp.ny() {
            for j in 0..nx {
                let k = i * nx + j;
                let k2 = self.work.sp.k2(i, j);
                let k4 = k2 * k2;
                let a11 = -mm * k4 - self.pc * cb / hb;
                let a12 = self.pc / hb;
                let a21 = -cb * mm * k4 + cb * k2 * inv_pe;
                let a22 = -k2 * inv_pe;
                let (p11, p12, p21, p22) = (1.0 - c * a11, -c * a12, -c * a21, 1.0 - c * a22);
                let det = p11 * p22 - p12 * p21;
                let (u, v) = (self.work.a[k], self.work.b[k]);
                let xh = (u * p22 - v * p12) / det;
                let xm = (v * p11 - u * p21) / det;
                self.work.w[k] = xh + I * xm;
            }
        }
        self.work.sp.inverse(&mut self.work.w);
        let (xh, xm) = x.split_at_mut(n);
        for k in 0..n {
            xh[k] = self.work.w[k].re;
            xm[k] = self.work.w[k].im;
        }
    }
}

/// Thickness history sampled at accepted steps, interpolated by cubic Hermite.
#[derive(Debug, Clone, Default)]
pub struct HermiteTrack {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

impl HermiteTrack {
    pub fn push(&mut self, t: f64, value: &[f64], slope: &[f64]) {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return;
            }
        }
        self.times.push(t);
        self.values.push(value.to_vec());
        self.slopes.push(slope.to_vec());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let n = self.times.len();
        assert!(n > 0, "empty track");
        if n == 1 || t <= self.times[0] {
            out.copy_from_slice(&self.values[0]);
            return;
        }
        let k = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let dt = t1 - t0;
        let s = ((t - t0) / dt).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (y0, y1) = (&self.values[k], &self.values[k + 1]);
        let (d0, d1) = (&self.slopes[k], &self.slopes[k + 1]);
        for i in 0..out.len() {
            out[i] = h00 * y0[i] + h10 * dt * d0[i] + h01 * y1[i] + h11 * dt * d1[i];
        }
    }
}

/// Dye content q = h f transported by the flow of a given thickness history.
pub struct Stage2 {
    work: Work,
    track: HermiteTrack,
    pe_f: f64,
    cached_t: f64,
    h: Vec<f64>,
    fx_flux: Vec<f64>,
    fy_flux: Vec<f64>,
    f: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    qx: Vec<f64>,
    qy: Vec<f64>,
    zero: Vec<f64>,
    pub evaluations: usize,
}

impl Stage2 {
    pub fn new(nx: usize, ny: usize, pe_f: f64, track: HermiteTrack, dealias: bool) -> Self {
        let n = nx * ny;
        let v = vec![0.0; n];
        Self {
            work: Work::new(nx, ny, dealias),
            track,
            pe_f,
            cached_t: f64::NAN,
            h: v.clone(),
            fx_flux: v.clone(),
            fy_flux: v.clone(),
            f: v.clone(),
            gx: v.clone(),
            gy: v.clone(),
            qx: v.clone(),
            qy: v.clone(),
            zero: v,
            evaluations: 0,
        }
    }

    fn refresh(&mut self, t: f64) {
        if t == self.cached_t {
            return;
        }
        self.track.eval(t, &mut self.h);
        let zero = std::mem::take(&mut self.zero);
        self.work.spectra(&self.h, &zero);
        self.zero = zero;
        self.work.gradient(true, true, &mut self.gx, &mut self.gy);
        for k in 0..self.h.len() {
            let h3 = self.h[k].powi(3) / 12.0;
            self.fx_flux[k] = h3 * self.gx[k];
            self.fy_flux[k] = h3 * self.gy[k];
        }
        self.cached_t = t;
    }
}

impl OdeSystem for Stage2 {
    fn dim(&self) -> usize {
        self.work.n()
    }

    fn rhs(&mut self, t: f64, q: &[f64], dqdt: &mut [f64]) {
        self.evaluations += 1;
        self.refresh(t);
        let n = self.work.n();
        for k in 0..n {
            self.f[k] = q[k] / self.h[k];
        }
        let zero = std::mem::take(&mut self.zero);
        self.work.spectra(&self.f, &zero);
        self.zero = zero;
        self.work.gradient(true, false, &mut self.gx, &mut self.gy);
        let inv_pe = 1.0 / self.pe_f;
        for k in 0..n {
            self.qx[k] = self.f[k] * self.fx_flux[k] - inv_pe * self.h[k] * self.gx[k];
            self.qy[k] = self.f[k] * self.fy_flux[k] - inv_pe * self.h[k] * self.gy[k];
        }
        let (qx, qy) = (std::mem::take(&mut self.qx), std::mem::take(&mut self.qy));
        self.work.divergence_spectrum(&qx, &qy, false);
        self.qx = qx;
        self.qy = qy;
        self.work.sp.inverse(&mut self.work.w2);
        for k in 0..n {
            dqdt[k] = -self.work.w2[k].re;
        }
    }
}

impl Preconditioned for Stage2 {
    fn setup_preconditioner(&mut self, _t: f64, _y: &[f64]) {}

    fn precondition(&mut self, c: f64, b: &[f64], x: &mut [f64]) {
        let n = self.work.n();
        for k in 0..n {
            self.work.z[k] = Complex64::new(b[k], 0.0);
        }
        self.work.sp.forward(&mut self.work.z);
        let nx = self.work.sp.nx();
        let inv_pe = 1.0 / self.pe_f;
        for i in 0..self.work.sp.ny() {
            for j in 0..nx {
                let k = i * nx + j;
                self.work.z[k] /= 1.0 + c * self.work.sp.k2(i, j) * inv_pe;
            }
        }
        self.work.sp.inverse(&mut self.work.z);
        for k in 0..n {
            x[k] = self.work.z[k].re;
        }
    }
}
