use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::{NewtonSolver, OdeSystem};

/// Forward-difference Jacobian with a dense LU of I − cJ.
pub struct DenseLu {
    jac: DMatrix<f64>,
    lu: Option<LU<f64, Dyn, Dyn>>,
    work: Vec<f64>,
    fwork: Vec<f64>,
}

impl DenseLu {
    pub fn new(n: usize) -> Self {
        Self {
            jac: DMatrix::zeros(n, n),
            lu: None,
            work: vec![0.0; n],
            fwork: vec![0.0; n],
        }
    }

    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jac
    }
}

impl<S: OdeSystem + ?Sized> NewtonSolver<S> for DenseLu {
    fn update_jacobian(&mut self, sys: &mut S, t: f64, y: &[f64], f: &[f64]) {
        let eps = f64::EPSILON.sqrt();
        self.work.copy_from_slice(y);
        for j in 0..y.len() {
            let step = eps * y[j].abs().max(1.0);
            self.work[j] = y[j] + step;
            let step = self.work[j] - y[j];
            sys.rhs(t, &self.work, &mut self.fwork);
            for i in 0..y.len() {
                self.jac[(i, j)] = (self.fwork[i] - f[i]) / step;
            }
            self.work[j] = y[j];
        }
    }

    fn factor(&mut self, _sys: &mut S, c: f64) -> bool {
        let n = self.jac.nrows();
        let m = DMatrix::identity(n, n) - &self.jac * c;
        let lu = m.lu();
        let ok = lu.is_invertible();
        self.lu = ok.then_some(lu);
        ok
    }

    fn solve(&mut self, _sys: &mut S, b: &[f64], x: &mut [f64]) -> bool {
        let Some(lu) = &self.lu else { return false };
        match lu.solve(&DVector::from_column_slice(b)) {
            Some(sol) => {
                x.copy_from_slice(sol.as_slice());
                true
            }
            None => false,
        }
    }
}
