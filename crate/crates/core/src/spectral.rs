//! Fourier collocation on the periodic cell.
//!
//! Arrays are row-major (`i * nx + j`, x fastest). Odd derivatives drop the
//! Nyquist mode so that they map real data to real data; the Laplacian keeps it.
//! Two real fields can share one complex transform: pack `a + i b`, then
//! either apply a real operator directly or split the spectrum with [`Spectral2D::unpack`].

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Per-instance transform plans and wavenumber tables.
pub struct Spectral2D {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx2: Vec<f64>,
    ky2: Vec<f64>,
    keep: Option<Vec<bool>>,
    col: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral2D")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("dealias", &self.keep.is_some())
            .finish()
    }
}

fn wavenumber(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn first_symbol(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if n % 2 == 0 && j == n / 2 {
                0.0
            } else {
                wavenumber(j, n) as f64
            }
        })
        .collect()
}

impl Spectral2D {
    /// `ny = 1` gives the one-dimensional operators used by the streak model.
    pub fn new(nx: usize, ny: usize, dealias: bool) -> Self {
        assert!(nx >= 1 && ny >= 1);
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(nx);
        let inv_x = planner.plan_fft_inverse(nx);
        let fwd_y = planner.plan_fft_forward(ny);
        let inv_y = planner.plan_fft_inverse(ny);
        let scratch_len = [&fwd_x, &inv_x, &fwd_y, &inv_y]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let kx2 = (0..nx)
            .map(|j| (wavenumber(j, nx) as f64).powi(2))
            .collect();
        let ky2 = (0..ny)
            .map(|i| (wavenumber(i, ny) as f64).powi(2))
            .collect();
        let keep = dealias.then(|| {
            let cut = |k: i64, n: usize| 3 * k.unsigned_abs() as usize <= n;
            let mut keep = Vec::with_capacity(nx * ny);
            for i in 0..ny {
                for j in 0..nx {
                    keep.push(cut(wavenumber(i, ny), ny) && cut(wavenumber(j, nx), nx));
                }
            }
            keep
        });
        Self {
            nx,
            ny,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            kx: first_symbol(nx),
            ky: first_symbol(ny),
            kx2,
            ky2,
            keep,
            col: vec![Complex64::default(); ny],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// x-derivative symbol (without the factor i) at column `j`.
    #[inline]
    pub fn kx(&self, j: usize) -> f64 {
        self.kx[j]
    }

    #[inline]
    pub fn ky(&self, i: usize) -> f64 {
        self.ky[i]
    }

    /// |k|² at spectral index (i, j), Nyquist included.
    #[inline]
    pub fn k2(&self, i: usize, j: usize) -> f64 {
        self.kx2[j] + self.ky2[i]
    }

    /// In-place forward 2D transform.
    pub fn forward(&mut self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    /// In-place inverse 2D transform, normalized.
    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        self.transform(buf, false);
        let s = 1.0 / self.len() as f64;
        for z in buf.iter_mut() {
            *z *= s;
        }
    }

    fn transform(&mut self, buf: &mut [Complex64], forward: bool) {
        debug_assert_eq!(buf.len(), self.len());
        let (px, py) = if forward {
            (&self.fwd_x, &self.fwd_y)
        } else {
            (&self.inv_x, &self.inv_y)
        };
        if self.nx > 1 {
            px.process_with_scratch(buf, &mut self.scratch);
        }
        if self.ny > 1 {
            let nx = self.nx;
            for j in 0..nx {
                for (i, c) in self.col.iter_mut().enumerate() {
                    *c = buf[i * nx + j];
                }
                py.process_with_scratch(&mut self.col, &mut self.scratch);
                for (i, c) in self.col.iter().enumerate() {
                    buf[i * nx + j] = *c;
                }
            }
        }
    }

    /// Writes `a + i b` into `buf`.
    pub fn pack(a: &[f64], b: &[f64], buf: &mut [Complex64]) {
        for ((z, &x), &y) in buf.iter_mut().zip(a).zip(b) {
            *z = Complex64::new(x, y);
        }
    }

    /// Splits the transform of `a + i b` into the spectra of `a` and `b`.
    pub fn unpack(&self, z: &[Complex64], a: &mut [Complex64], b: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        for i in 0..ny {
            let im = (ny - i) % ny;
            for j in 0..nx {
                let jm = (nx - j) % nx;
                let zk = z[i * nx + j];
                let zc = z[im * nx + jm].conj();
                a[i * nx + j] = (zk + zc) * 0.5;
                b[i * nx + j] = (zk - zc) * Complex64::new(0.0, -0.5);
            }
        }
    }

    /// Zeroes the modes removed by the 2/3 rule, if enabled.
    pub fn filter(&self, spec: &mut [Complex64]) {
        if let Some(keep) = &self.keep {
            for (z, &k) in spec.iter_mut().zip(keep) {
                if !k {
                    *z = Complex64::default();
                }
            }
        }
    }

    /// Multiplies a spectrum in place by `symbol(i, j)`.
    pub fn apply(&self, spec: &mut [Complex64], mut symbol: impl FnMut(usize, usize) -> Complex64) {
        let nx = self.nx;
        for i in 0..self.ny {
            for j in 0..nx {
                spec[i * nx + j] *= symbol(i, j);
            }
        }
    }

    fn real_op(
        &mut self,
        u: &[f64],
        symbol: impl Fn(&Self, usize, usize) -> Complex64,
    ) -> Vec<f64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        self.filter(&mut buf);
        let nx = self.nx;
        for i in 0..self.ny {
            for j in 0..nx {
                buf[i * nx + j] *= symbol(self, i, j);
            }
        }
        self.inverse(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    pub fn dx(&mut self, u: &[f64]) -> Vec<f64> {
        self.real_op(u, |s, _, j| Complex64::new(0.0, s.kx[j]))
    }

    pub fn dy(&mut self, u: &[f64]) -> Vec<f64> {
        self.real_op(u, |s, i, _| Complex64::new(0.0, s.ky[i]))
    }

    pub fn laplacian(&mut self, u: &[f64]) -> Vec<f64> {
        self.real_op(u, |s, i, j| Complex64::new(-s.k2(i, j), 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    #[test]
    fn derivatives_of_trig_product_are_exact() {
        let g = Grid2D::square(40).unwrap();
        let mut s = Spectral2D::new(40, 40, false);
        let u = g.sample(|x, y| (3.0 * x).sin() * (2.0 * y).cos());
        let ux = s.dx(&u);
        let uy = s.dy(&u);
        let lap = s.laplacian(&u);
        let ex = g.sample(|x, y| 3.0 * (3.0 * x).cos() * (2.0 * y).cos());
        let ey = g.sample(|x, y| -2.0 * (3.0 * x).sin() * (2.0 * y).sin());
        for k in 0..g.len() {
            assert!((ux[k] - ex[k]).abs() < 1e-10);
            assert!((uy[k] - ey[k]).abs() < 1e-10);
            assert!((lap[k] + 13.0 * u[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn every_resolved_sine_differentiates_exactly() {
        let n = 16;
        let mut s = Spectral2D::new(n, 1, false);
        for k in 1..n / 2 {
            let xs: Vec<f64> = (0..n).map(|j| crate::grid::node(j, n)).collect();
            let u: Vec<f64> = xs.iter().map(|&x| (k as f64 * x).sin()).collect();
            let du = s.dx(&u);
            for (d, &x) in du.iter().zip(&xs) {
                assert!((d - k as f64 * (k as f64 * x).cos()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unpack_separates_two_real_fields() {
        let g = Grid2D::new(8, 6).unwrap();
        let mut s = Spectral2D::new(8, 6, false);
        let a = g.sample(|x, y| (x + 0.3).sin() + y.cos() * 0.5 + 0.2);
        let b = g.sample(|x, y| (2.0 * x - y).cos());
        let mut z = vec![Complex64::default(); g.len()];
        Spectral2D::pack(&a, &b, &mut z);
        s.forward(&mut z);
        let mut ah = vec![Complex64::default(); g.len()];
        let mut bh = ah.clone();
        s.unpack(&z, &mut ah, &mut bh);
        let mut ra: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        s.forward(&mut ra);
        let mut rb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        s.forward(&mut rb);
        for k in 0..g.len() {
            assert!((ah[k] - ra[k]).norm() < 1e-12);
            assert!((bh[k] - rb[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn dealiasing_removes_high_modes() {
        let n = 12;
        let mut s = Spectral2D::new(n, 1, true);
        let xs: Vec<f64> = (0..n).map(|j| crate::grid::node(j, n)).collect();
        let u: Vec<f64> = xs.iter().map(|&x| (5.0 * x).sin() + x.sin()).collect();
        let du = s.dx(&u);
        for (d, &x) in du.iter().zip(&xs) {
            assert!((d - x.cos()).abs() < 1e-12);
        }
    }
}
