use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Uniform periodic grid on (−π, π]². Node `j` sits at −π + 2π(j+1)/m, so
/// the left endpoint is excluded and π itself is a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid2D {
    /// Points along x (columns).
    pub nx: usize,
    /// Points along y (rows).
    pub ny: usize,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::Grid(format!(
                "point counts must be even and at least 2, got {nx}x{ny}"
            )));
        }
        Ok(Self { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI / self.ny as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        node(j, self.nx)
    }

    pub fn y(&self, i: usize) -> f64 {
        node(i, self.ny)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    /// Row-major index, x varying fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nx + j
    }

    /// Samples `f(x, y)` at every node in row-major order.
    pub fn sample(&self, mut f: impl FnMut(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.ny {
            let y = self.y(i);
            for j in 0..self.nx {
                out.push(f(self.x(j), y));
            }
        }
        out
    }

    /// Trapezoid (= spectrally accurate) quadrature over the periodic cell.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.dx() * self.dy()
    }
}

/// Node position on (−π, π] for a periodic grid of `n` points.
pub fn node(j: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * (j as f64 + 1.0) / n as f64
}

/// Uniform initial state: h = c = 1, p = 0 and f = f0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialConditions {
    /// Initial fluorescein concentration relative to the critical one.
    pub f0: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self { f0: 1.0 }
    }
}

impl InitialConditions {
    pub fn new(f0: f64) -> Result<Self> {
        if !(f0.is_finite() && f0 > 0.0) {
            return Err(domain("f0", format!("must be positive, got {f0}")));
        }
        Ok(Self { f0 })
    }
}

/// All fields at one time. Arrays are row-major with `shape = (rows, cols)`;
/// one-dimensional solutions use a single row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub shape: (usize, usize),
    pub h: Vec<f64>,
    pub c: Vec<f64>,
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    pub u_bar: Vec<f64>,
    pub v_bar: Vec<f64>,
}

impl FieldState {
    pub fn uniform(t: f64, shape: (usize, usize), ic: &InitialConditions) -> Self {
        let n = shape.0 * shape.1;
        Self {
            t,
            shape,
            h: vec![1.0; n],
            c: vec![1.0; n],
            f: vec![ic.f0; n],
            p: vec![0.0; n],
            u_bar: vec![0.0; n],
            v_bar: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn min_h(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
