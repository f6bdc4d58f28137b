//! Evaporation-rate distributions J(x, y).
//!
//! A spec is a background level plus one or more Gaussian peaks. Circular
//! peaks carry per-axis widths; elliptic peaks are parameterized by the
//! focal vector F (centre to focus) and eccentricity e, from which the
//! semi-axes a = ‖F‖/e, b = a√(1 − e²) and the major-axis angle follow.
//!
//! With K peaks the background is v_b times the mean of the per-peak
//! background multipliers β_k (β = 1 for circular peaks), and peak k adds
//! (a_k − β_k v_b) Ĝ_k. For a single elliptic peak this is
//! β v_b + (a − β v_b) Ĝ; for circular peaks it is v_b + Σ (a_k − v_b) G_k.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Eccentricities above this are rejected as degenerate streaks.
pub const MAX_ECCENTRICITY: f64 = 0.999;

/// Boundary defect above which a spec is treated as non-periodic.
pub const PERIODICITY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircularPeak {
    pub x0: f64,
    pub y0: f64,
    pub xw: f64,
    pub yw: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipticPeak {
    pub x0: f64,
    pub y0: f64,
    pub fx: f64,
    pub fy: f64,
    pub e: f64,
    pub a: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Peak {
    Circular(CircularPeak),
    Elliptic(EllipticPeak),
}

impl Peak {
    pub fn center(&self) -> (f64, f64) {
        match self {
            Peak::Circular(p) => (p.x0, p.y0),
            Peak::Elliptic(p) => (p.x0, p.y0),
        }
    }

    pub fn height(&self) -> f64 {
        match self {
            Peak::Circular(p) => p.a,
            Peak::Elliptic(p) => p.a,
        }
    }

    /// Background multiplier; circular peaks use the bare baseline.
    pub fn beta(&self) -> f64 {
        match self {
            Peak::Circular(_) => 1.0,
            Peak::Elliptic(p) => p.beta,
        }
    }
}

/// Ellipse axes recovered from a focal vector and eccentricity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseGeometry {
    /// Centre-to-focus distance ‖F‖.
    pub c_foc: f64,
    /// Semi-major axis.
    pub a: f64,
    /// Semi-minor axis.
    pub b: f64,
    /// Major-axis angle.
    pub theta: f64,
}

pub fn ellipse_geometry(fx: f64, fy: f64, e: f64) -> Result<EllipseGeometry> {
    if !(e > 0.0 && e <= MAX_ECCENTRICITY) {
        return Err(Error::Geometry(format!(
            "eccentricity must lie in (0, {MAX_ECCENTRICITY}], got {e}"
        )));
    }
    let c_foc = fx.hypot(fy);
    if !(c_foc > 0.0 && c_foc.is_finite()) {
        return Err(Error::Geometry("focal vector has zero length".into()));
    }
    let a = c_foc / e;
    let b = a * (1.0 - e * e).sqrt();
    Ok(EllipseGeometry {
        c_foc,
        a,
        b,
        theta: fy.atan2(fx),
    })
}

/// Parameterized J(x, y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaporationSpec {
    pub v_b: f64,
    pub peaks: Vec<Peak>,
}

/// Precomputed quadratic form of one peak: Q = qxx dx² + 2 qxy dx dy + qyy dy².
#[derive(Debug, Clone, Copy)]
struct CompiledPeak {
    x0: f64,
    y0: f64,
    qxx: f64,
    qxy: f64,
    qyy: f64,
    amplitude: f64,
    height: f64,
}

impl CompiledPeak {
    #[inline]
    fn shape(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.x0;
        let dy = y - self.y0;
        let q = self.qxx * dx * dx + 2.0 * self.qxy * dx * dy + self.qyy * dy * dy;
        (-0.5 * q).exp()
    }
}

/// A validated spec ready for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Evaporation {
    background: f64,
    peaks: Vec<CompiledPeak>,
}

impl Evaporation {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if let [p] = self.peaks.as_slice() {
            // same value as the sum below, written so the peak height is exact
            let g = p.shape(x, y);
            return p.height * g + self.background * (1.0 - g);
        }
        let mut j = self.background;
        for p in &self.peaks {
            j += p.amplitude * p.shape(x, y);
        }
        j
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn sample(&self, grid: &Grid2D) -> Vec<f64> {
        grid.sample(|x, y| self.eval(x, y))
    }

    /// Largest boundary deviation from the background on x = π and y = π,
    /// relative to the largest peak amplitude.
    pub fn periodicity_defect(&self) -> f64 {
        let scale = self
            .peaks
            .iter()
            .map(|p| p.amplitude.abs())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        const SAMPLES: usize = 1024;
        let mut worst: f64 = 0.0;
        for k in 0..SAMPLES {
            let s = -PI + 2.0 * PI * k as f64 / SAMPLES as f64;
            for (x, y) in [(PI, s), (s, PI)] {
                worst = worst.max((self.eval(x, y) - self.background).abs());
            }
        }
        worst / scale
    }
}

impl EvaporationSpec {
    pub fn single_ellipse(v_b: f64, peak: EllipticPeak) -> Self {
        Self {
            v_b,
            peaks: vec![Peak::Elliptic(peak)],
        }
    }

    pub fn uniform(level: f64) -> Self {
        Self {
            v_b: level,
            peaks: vec![Peak::Circular(CircularPeak {
                x0: 0.0,
                y0: 0.0,
                xw: 1.0,
                yw: 1.0,
                a: level,
            })],
        }
    }

    pub fn compile(&self) -> Result<Evaporation> {
        if self.peaks.is_empty() {
            return Err(Error::Geometry("at least one peak is required".into()));
        }
        if !(self.v_b.is_finite() && self.v_b >= 0.0) {
            return Err(Error::Geometry(format!(
                "v_b must be non-negative, got {}",
                self.v_b
            )));
        }
        let k = self.peaks.len() as f64;
        let beta_mean = self.peaks.iter().map(Peak::beta).sum::<f64>() / k;
        let mut peaks = Vec::with_capacity(self.peaks.len());
        for peak in &self.peaks {
            let compiled = match peak {
                Peak::Circular(p) => {
                    if !(p.xw > 0.0 && p.yw > 0.0) {
                        return Err(Error::Geometry("peak widths must be positive".into()));
                    }
                    CompiledPeak {
                        x0: p.x0,
                        y0: p.y0,
                        qxx: 1.0 / (p.xw * p.xw),
                        qxy: 0.0,
                        qyy: 1.0 / (p.yw * p.yw),
                        amplitude: p.a - self.v_b,
                        height: p.a,
                    }
                }
                Peak::Elliptic(p) => {
                    let g = ellipse_geometry(p.fx, p.fy, p.e)?;
                    let (s, c) = g.theta.sin_cos();
                    let ia = 1.0 / (g.a * g.a);
                    let ib = 1.0 / (g.b * g.b);
                    CompiledPeak {
                        x0: p.x0,
                        y0: p.y0,
                        qxx: c * c * ia + s * s * ib,
                        qxy: c * s * (ia - ib),
                        qyy: s * s * ia + c * c * ib,
                        amplitude: p.a - p.beta * self.v_b,
                        height: p.a,
                    }
                }
            };
            peaks.push(compiled);
        }
        Ok(Evaporation {
            background: self.v_b * beta_mean,
            peaks,
        })
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.compile()?.eval(x, y))
    }

    pub fn periodicity_defect(&self) -> Result<f64> {
        Ok(self.compile()?.periodicity_defect())
    }

    /// Soft-constraint violations (peak not above the baseline, β ≤ 0).
    /// These are reported, not rejected, since optimizers may probe them.
    pub fn soft_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, p) in self.peaks.iter().enumerate() {
            if p.height() <= self.v_b {
                out.push(format!(
                    "peak {k}: height {} not above v_b {}",
                    p.height(),
                    self.v_b
                ));
            }
            if p.beta() <= 0.0 {
                out.push(format!("peak {k}: beta {} not positive", p.beta()));
            }
        }
        out
    }
}

/// Axisymmetric J(r) = β v_b + (a − v_b) exp(−(r/r_w)²/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialEvaporation {
    pub v_b: f64,
    pub r_w: f64,
    pub a: f64,
    pub beta: f64,
}

impl RadialEvaporation {
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        let s = r / self.r_w;
        self.beta * self.v_b + (self.a - self.v_b) * (-0.5 * s * s).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_w > 0.0 && self.r_w.is_finite()) {
            return Err(Error::Geometry(format!(
                "r_w must be positive, got {}",
                self.r_w
            )));
        }
        Ok(())
    }
}

/// Streak J(x) = β v_b + (a − β v_b) exp(−((x − x_c)/x_w)²/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreakEvaporation {
    pub v_b: f64,
    pub x_w: f64,
    pub a: f64,
    pub beta: f64,
    /// Streak centre; zero in the textbook form.
    #[serde(default)]
    pub x_c: f64,
}

impl StreakEvaporation {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.x_c) / self.x_w;
        let g = (-0.5 * s * s).exp();
        self.a * g + self.beta * self.v_b * (1.0 - g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_w > 0.0 && self.x_w.is_finite()) {
            return Err(Error::Geometry(format!(
                "x_w must be positive, got {}",
                self.x_w
            )));
        }
        Ok(())
    }

    /// Relative deviation from the background at x = ±π.
    pub fn periodicity_defect(&self) -> f64 {
        let bg = self.beta * self.v_b;
        let amp = (self.a - bg).abs();
        if amp == 0.0 {
            return 0.0;
        }
        [PI, -PI]
            .iter()
            .map(|&x| (self.eval(x) - bg).abs() / amp)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_peak() -> EllipticPeak {
        EllipticPeak {
            x0: 0.0,
            y0: 0.0,
            fx: 0.5,
            fy: 0.5,
            e: 0.9,
            a: 0.8,
            beta: 0.5,
        }
    }

    #[test]
    fn geometry_of_diagonal_focal_vector() {
        let g = ellipse_geometry(0.5, 0.5, 0.9).unwrap();
        // reference values evaluated independently in double precision
        assert!((g.c_foc - 0.7071067811865476).abs() < 1e-12);
        assert!((g.a - 0.7856742013183862).abs() < 1e-12);
        assert!((g.b - 0.34246744460938755).abs() < 1e-12);
        assert!((g.theta - PI / 4.0).abs() < 1e-15);
        assert_eq!(ellipse_geometry(0.3, 0.0, 0.5).unwrap().theta, 0.0);
    }

    #[test]
    fn geometry_rejects_degenerate_input() {
        assert!(ellipse_geometry(0.5, 0.5, 1.0).is_err());
        assert!(ellipse_geometry(0.5, 0.5, 0.9995).is_err());
        assert!(ellipse_geometry(0.5, 0.5, 0.0).is_err());
        assert!(ellipse_geometry(0.5, 0.5, -0.2).is_err());
        assert!(ellipse_geometry(0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn elliptic_peak_value_and_far_field() {
        let spec = EvaporationSpec::single_ellipse(0.07, synthetic_peak());
        let j = spec.compile().unwrap();
        assert_eq!(j.eval(0.0, 0.0), 0.8);
        assert!((j.eval(50.0, -40.0) - 0.035).abs() < 1e-15);
        assert!((j.background() - 0.035).abs() < 1e-15);
    }

    #[test]
    fn radial_and_streak_centres() {
        let r = RadialEvaporation {
            v_b: 0.1,
            r_w: 0.5,
            a: 0.9,
            beta: 2.0,
        };
        assert!((r.eval(0.0) - (0.2 + 0.8)).abs() < 1e-15);
        let s = StreakEvaporation {
            v_b: 0.1,
            x_w: 0.5,
            a: 0.9,
            beta: 2.0,
            x_c: 0.0,
        };
        assert_eq!(s.eval(0.0), 0.9);
        let flat = RadialEvaporation {
            v_b: 0.1,
            r_w: 0.5,
            a: 0.1,
            beta: 1.0,
        };
        for k in 0..20 {
            assert!((flat.eval(k as f64 * 0.3) - 0.1).abs() < 1e-16);
        }
    }

    #[test]
    fn periodicity_screening() {
        let tight = EvaporationSpec {
            v_b: 0.1,
            peaks: vec![Peak::Circular(CircularPeak {
                x0: 0.0,
                y0: 0.0,
                xw: 0.3,
                yw: 0.3,
                a: 1.0,
            })],
        };
        assert!(tight.periodicity_defect().unwrap() < 1e-10);
        let wide = EvaporationSpec {
            v_b: 0.1,
            peaks: vec![Peak::Circular(CircularPeak {
                x0: 0.0,
                y0: 0.0,
                xw: 3.0,
                yw: 3.0,
                a: 1.0,
            })],
        };
        let d = wide.periodicity_defect().unwrap();
        assert!(d > 0.1);
        assert!((d - (-PI * PI / 18.0).exp()).abs() < 1e-12);
        let flat = EvaporationSpec::uniform(0.2);
        assert_eq!(flat.periodicity_defect().unwrap(), 0.0);
        // the synthetic ellipse is just inside the threshold
        let synth = EvaporationSpec::single_ellipse(0.07, synthetic_peak());
        assert!(synth.periodicity_defect().unwrap() < PERIODICITY_THRESHOLD);
    }

    #[test]
    fn zero_amplitude_peak_is_flat() {
        let spec = EvaporationSpec {
            v_b: 0.1,
            peaks: vec![
                Peak::Elliptic(EllipticPeak {
                    a: 0.8,
                    ..synthetic_peak()
                }),
                Peak::Elliptic(EllipticPeak {
                    x0: 1.0,
                    y0: -1.0,
                    a: 0.05,
                    ..synthetic_peak()
                }),
            ],
        };
        let two = spec.compile().unwrap();
        let one = EvaporationSpec::single_ellipse(
            0.1,
            EllipticPeak {
                a: 0.8,
                ..synthetic_peak()
            },
        )
        .compile()
        .unwrap();
        for &(x, y) in &[(1.0, -1.0), (0.3, 0.2), (-2.0, 2.5)] {
            assert!((two.eval(x, y) - one.eval(x, y)).abs() < 1e-15);
        }
    }
}
