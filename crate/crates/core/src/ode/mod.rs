//! Time integrators.
//!
//! [`bdf`] is the stiff variable-order multistep solver used by every forward
//! model; the Newton systems it produces are handed to a [`NewtonSolver`],
//! either a dense finite-difference Jacobian with LU ([`dense`]) or
//! preconditioned matrix-free GMRES ([`krylov`]). [`dopri`] is an explicit
//! Runge–Kutta pair kept independent of the stiff path for verification.

pub mod bdf;
pub mod dense;
pub mod dopri;
pub mod krylov;

/// A first-order system y' = f(t, y).
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// Solves the Newton systems (I − c J) x = b of an implicit method.
pub trait NewtonSolver<S: OdeSystem + ?Sized> {
    /// Refreshes the Jacobian at `(t, y)`; `f` is `f(t, y)`.
    fn update_jacobian(&mut self, sys: &mut S, t: f64, y: &[f64], f: &[f64]);

    /// Prepares solves with iteration matrix I − c J. Returns false if singular.
    fn factor(&mut self, sys: &mut S, c: f64) -> bool;

    /// Returns false if the solve failed.
    fn solve(&mut self, sys: &mut S, b: &[f64], x: &mut [f64]) -> bool;
}

/// Root-mean-square norm.
pub fn rms_norm(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub(crate) fn scaled_rms(x: &[f64], scale: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let s: f64 = x.iter().zip(scale).map(|(v, s)| (v / s).powi(2)).sum();
    (s / x.len() as f64).sqrt()
}
