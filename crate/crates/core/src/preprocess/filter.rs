use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

use super::Frame;

/// tanh window I₂ on (−π, π]²: edges at `a`, `b`, sharpness `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowParams {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

impl Default for WindowParams {
    fn default() -> Self {
        Self {
            a: -2.6,
            b: 2.6,
            k: 5.0,
        }
    }
}

#[inline]
fn bump(s: f64, w: &WindowParams) -> f64 {
    0.5 * ((w.k * (s - w.a)).tanh() - (w.k * (s - w.b)).tanh())
}

/// I₂(x, y).
#[inline]
pub fn window_weight(x: f64, y: f64, w: &WindowParams) -> f64 {
    bump(x, w) * bump(y, w)
}

/// Pixel p of n mapped to [−π, π], endpoints included.
#[inline]
pub(crate) fn pixel_coordinate(p: usize, n: usize) -> f64 {
    if n < 2 {
        0.0
    } else {
        -PI + 2.0 * PI * p as f64 / (n - 1) as f64
    }
}

/// Blends the frame toward its mean outside the window:
/// μ + I₂ (F − μ).
pub fn periodic_window(frame: &Frame, w: &WindowParams) -> Frame {
    let mu = frame.mean();
    let wx: Vec<f64> = (0..frame.cols)
        .map(|j| bump(pixel_coordinate(j, frame.cols), w))
        .collect();
    let mut out = frame.clone();
    for i in 0..frame.rows {
        let wy = bump(pixel_coordinate(i, frame.rows), w);
        for j in 0..frame.cols {
            let v = frame.get(i, j);
            out.set(i, j, mu + wy * wx[j] * (v - mu));
        }
    }
    out
}

fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma + 0.5) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|d| {
            let s = d as f64 / sigma;
            (-0.5 * s * s).exp()
        })
        .collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Half-sample symmetric reflection (d c b a | a b c d | d c b a).
#[inline]
fn reflect(mut i: i64, n: i64) -> usize {
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

fn convolve_line(src: &[f64], stride: usize, len: usize, k: &[f64], dst: &mut [f64]) {
    let radius = (k.len() / 2) as i64;
    for p in 0..len {
        let mut acc = 0.0;
        for (t, w) in k.iter().enumerate() {
            let q = reflect(p as i64 + t as i64 - radius, len as i64);
            acc += w * src[q * stride];
        }
        dst[p * stride] = acc;
    }
}

/// Separable Gaussian blur with reflecting borders; the kernel is cut at
/// 4σ and renormalized.
pub fn gaussian_smooth(frame: &Frame, sigma: f64) -> Result<Frame> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(domain("sigma", format!("must be positive, got {sigma}")));
    }
    let k = kernel(sigma);
    let (rows, cols) = (frame.rows, frame.cols);
    let mut tmp = vec![0.0; rows * cols];
    for i in 0..rows {
        convolve_line(&frame.data[i * cols..], 1, cols, &k, &mut tmp[i * cols..]);
    }
    let mut out = vec![0.0; rows * cols];
    for j in 0..cols {
        convolve_line(&tmp[j..], cols, rows, &k, &mut out[j..]);
    }
    Frame::new(rows, cols, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_is_half_sample_symmetric() {
        let idx: Vec<usize> = (-3..8).map(|i| reflect(i, 5)).collect();
        assert_eq!(idx, vec![2, 1, 0, 0, 1, 2, 3, 4, 4, 3, 2]);
    }

    #[test]
    fn kernel_has_unit_mass_and_4_sigma_reach() {
        let k = kernel(2.0);
        assert_eq!(k.len(), 17);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_is_one_inside_and_small_outside() {
        let w = WindowParams::default();
        assert!((window_weight(0.0, 0.0, &w) - 1.0).abs() < 1e-9);
        assert!(window_weight(PI, PI, &w) < 1e-3);
        assert!(window_weight(-PI, 0.0, &w) < 1e-2);
    }
}
