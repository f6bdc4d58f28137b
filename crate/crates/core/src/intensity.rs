//! Fluorescence intensity with self-quenching.

use crate::error::{Error, Result};

/// Smallest extinction coefficient accepted by [`normalization_coefficient`].
pub const MIN_PHI: f64 = 1e-12;

/// I = I0 (1 − exp(−φ f h)) / (1 + f²) at a single point.
#[inline]
pub fn intensity_at(h: f64, f: f64, i0: f64, phi: f64) -> f64 {
    i0 * (-(-phi * f * h).exp_m1()) / (1.0 + f * f)
}

/// Elementwise intensity of paired thickness and concentration arrays.
pub fn intensity(h: &[f64], f: &[f64], i0: f64, phi: f64) -> Vec<f64> {
    assert_eq!(h.len(), f.len(), "h and f must have the same length");
    h.iter()
        .zip(f)
        .map(|(&h, &f)| intensity_at(h, f, i0, phi))
        .collect()
}

/// I0 such that the uniform initial state (h = 1, f = f0) has unit intensity.
pub fn normalization_coefficient(f0: f64, phi: f64) -> Result<f64> {
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(Error::DegenerateNormalization(format!(
            "f0 must be positive, got {f0}"
        )));
    }
    if !(phi.is_finite() && phi > MIN_PHI) {
        return Err(Error::DegenerateNormalization(format!(
            "phi must exceed {MIN_PHI:e}, got {phi}"
        )));
    }
    Ok((1.0 + f0 * f0) / (-(-phi * f0).exp_m1()))
}
