use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::node;

use super::Frame;

/// Keys cubic convolution weights (a = −½) for offset t ∈ [0, 1].
#[inline]
fn keys(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// Frame value with one ghost layer from Keys' boundary rule
/// f(−1) = 3f(0) − 3f(1) + f(2), which keeps quadratics exact.
fn extended(frame: &Frame, i: i64, j: i64) -> f64 {
    let (rows, cols) = (frame.rows as i64, frame.cols as i64);
    let ghost = |n: i64, v: &dyn Fn(i64) -> f64, at: i64| -> f64 {
        match n {
            1 => v(0),
            2 => {
                if at < 0 {
                    2.0 * v(0) - v(1)
                } else {
                    2.0 * v(1) - v(0)
                }
            }
            _ => {
                if at < 0 {
                    3.0 * v(0) - 3.0 * v(1) + v(2)
                } else {
                    3.0 * v(n - 1) - 3.0 * v(n - 2) + v(n - 3)
                }
            }
        }
    };
    if i < 0 || i >= rows {
        return ghost(rows, &|r| extended(frame, r, j), i);
    }
    if j < 0 || j >= cols {
        return ghost(cols, &|c| extended(frame, i, c), j);
    }
    frame.get(i as usize, j as usize)
}

/// Base index and offset for continuous pixel position `p` on `n` pixels.
#[inline]
fn locate(p: f64, n: usize) -> (i64, f64) {
    if n < 2 {
        return (0, 0.0);
    }
    let base = (p.floor() as i64).clamp(0, n as i64 - 2);
    (base, p - base as f64)
}

/// Bicubic interpolation onto the n×n model grid; the frame's pixel
/// centres span [−π, π] in both directions, rows along y.
pub fn bicubic_regrid(frame: &Frame, n: usize) -> Vec<f64> {
    let to_pixel = |x: f64, len: usize| (x + PI) / (2.0 * PI) * (len.max(2) - 1) as f64;
    let cols: Vec<(i64, [f64; 4])> = (0..n)
        .map(|j| {
            let (b, t) = locate(to_pixel(node(j, n), frame.cols), frame.cols);
            (b, keys(t))
        })
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        let (bi, t) = locate(to_pixel(node(i, n), frame.rows), frame.rows);
        let wi = keys(t);
        for &(bj, wj) in &cols {
            let mut acc = 0.0;
            for (a, wa) in wi.iter().enumerate() {
                for (b, wb) in wj.iter().enumerate() {
                    acc += wa * wb * extended(frame, bi - 1 + a as i64, bj - 1 + b as i64);
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Regrids every frame to n×n, clips negatives and divides by the
/// maximum of the first regridded frame. Returns the frames and divisor.
pub fn normalize_and_regrid(frames: &[Frame], n: usize) -> Result<(Vec<Vec<f64>>, f64)> {
    if n < 4 {
        return Err(Error::Grid(format!(
            "model grid needs at least 4 points, got {n}"
        )));
    }
    let mut out: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| {
            let mut g = bicubic_regrid(f, n);
            g.iter_mut().for_each(|v| *v = v.max(0.0));
            g
        })
        .collect();
    let first = out
        .first()
        .ok_or_else(|| Error::Normalization("no frames".into()))?;
    let scale = first.iter().copied().fold(0.0, f64::max);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Normalization(format!(
            "first frame maximum is {scale}; cannot normalize"
        )));
    }
    for f in &mut out {
        f.iter_mut().for_each(|v| *v /= scale);
    }
    Ok((out, scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_weights_partition_unity() {
        for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
            assert!((keys(t).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(keys(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn quadratic_surface_is_reproduced() {
        let (rows, cols) = (17, 23);
        let mut data = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let (y, x) = (i as f64, j as f64);
                data.push(0.3 + 0.02 * x - 0.01 * y + 0.001 * x * y);
            }
        }
        let f = Frame::new(rows, cols, data).unwrap();
        let g = bicubic_regrid(&f, 40);
        for i in 0..40 {
            for j in 0..40 {
                let y = (node(i, 40) + PI) / (2.0 * PI) * (rows - 1) as f64;
                let x = (node(j, 40) + PI) / (2.0 * PI) * (cols - 1) as f64;
                let exact = 0.3 + 0.02 * x - 0.01 * y + 0.001 * x * y;
                assert!((g[i * 40 + j] - exact).abs() < 1e-12);
            }
        }
    }
}
