//! Shared bookkeeping for the derivative-free minimizers.

use serde::{Deserialize, Serialize};

/// Wraps an objective, counting calls and remembering the best point.
pub struct Counted<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    pub evaluations: usize,
    pub best_f: f64,
    best_x: Vec<f64>,
}

impl<'a> Counted<'a> {
    pub fn new(f: &'a mut dyn FnMut(&[f64]) -> f64) -> Self {
        Self {
            f,
            evaluations: 0,
            best_f: f64::INFINITY,
            best_x: Vec::new(),
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let mut v = (self.f)(x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        if v < self.best_f || self.best_x.is_empty() {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        v
    }

    pub fn best(self) -> (Vec<f64>, f64) {
        (self.best_x, self.best_f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimOutcome {
    /// Best point seen.
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
    pub restarts: usize,
}

impl Counted<'_> {
    pub fn best_x(&self) -> &[f64] {
        &self.best_x
    }
}
