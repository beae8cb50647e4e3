use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Affine base map `f(x, p, q) = c + Qx + Bp + Dq`.
#[derive(Debug, Clone)]
pub struct BaseMap<T: Real> {
    pub c: DVector<T>,
    pub q: DMatrix<T>,
    pub b: DMatrix<T>,
    pub d: DMatrix<T>,
}

/// Both Lipschitz constants of the base map.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LipschitzModuli<T: Real> {
    /// `σ_max([Q B D])`
    pub concatenated: T,
    /// `max(‖Q‖, ‖B‖, ‖D‖)`
    pub max_block: T,
}

impl<T: Real> BaseMap<T> {
    pub fn new(c: DVector<T>, q: DMatrix<T>, b: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = c.len();
        if q.shape() != (n, n) {
            return Err(Error::Shape(format!("Q is {:?}, expected {n}×{n}", q.shape())));
        }
        if b.nrows() != n || d.nrows() != n {
            return Err(Error::Shape(format!("B and D need {n} rows")));
        }
        let finite = c.iter().chain(q.iter()).chain(b.iter()).chain(d.iter()).all(|v| v.is_finite_val());
        if !finite {
            return Err(Error::Schema { field: "base".into(), msg: "non-finite coefficient".into() });
        }
        Ok(BaseMap { c, q, b, d })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn l(&self) -> usize {
        self.b.ncols()
    }

    pub fn m(&self) -> usize {
        self.d.ncols()
    }

    pub fn eval(&self, x: &DVector<T>, p: &DVector<T>, q: &DVector<T>) -> Result<DVector<T>> {
        if x.len() != self.n() || p.len() != self.l() || q.len() != self.m() {
            return Err(Error::Shape(format!(
                "arguments have lengths ({}, {}, {}), expected ({}, {}, {})",
                x.len(),
                p.len(),
                q.len(),
                self.n(),
                self.l(),
                self.m()
            )));
        }
        Ok(&self.c + &self.q * x + &self.b * p + &self.d * q)
    }

    /// `λ_min((Q + Qᵀ)/2)`.
    pub fn strong_monotonicity_modulus(&self) -> T {
        linalg::min_eig(&self.q).map(|(v, _)| v).unwrap_or_else(T::zero)
    }

    pub fn lipschitz_moduli(&self) -> LipschitzModuli<T> {
        let n = self.n();
        let mut cat = DMatrix::zeros(n, n + self.l() + self.m());
        cat.view_mut((0, 0), (n, n)).copy_from(&self.q);
        cat.view_mut((0, n), (n, self.l())).copy_from(&self.b);
        cat.view_mut((0, n + self.l()), (n, self.m())).copy_from(&self.d);
        let max_block = linalg::op_norm(&self.q).max(linalg::op_norm(&self.b)).max(linalg::op_norm(&self.d));
        LipschitzModuli { concatenated: linalg::op_norm(&cat), max_block }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn curvature() -> BaseMap<f64> {
        BaseMap::new(
            DVector::from_vec(vec![0.25, 0.0, 1.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 2.0]),
            DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0]),
            DMatrix::zeros(3, 0),
        )
        .unwrap()
    }

    #[test]
    fn evaluation_at_origin() {
        let f = curvature();
        let y = f.eval(&DVector::zeros(3), &DVector::zeros(2), &DVector::zeros(0)).unwrap();
        assert_relative_eq!(y, DVector::from_vec(vec![0.25, 0.0, 1.0]));
        assert!(f.eval(&DVector::zeros(2), &DVector::zeros(2), &DVector::zeros(0)).is_err());
    }

    #[test]
    fn moduli() {
        let f = curvature();
        assert_relative_eq!(f.strong_monotonicity_modulus(), -1.0, epsilon = 1e-12);
        // [Q B] has singular values: ‖[Q B]‖ = 2 (third row)
        let lm = f.lipschitz_moduli();
        let mut cat = DMatrix::zeros(3, 5);
        cat.view_mut((0, 0), (3, 3)).copy_from(&f.q);
        cat.view_mut((0, 3), (3, 2)).copy_from(&f.b);
        let sv = cat.svd(false, false).singular_values;
        assert_relative_eq!(lm.concatenated, sv.max(), epsilon = 1e-12);
        let upper = BaseMap::new(
            DVector::zeros(2),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]),
            DMatrix::zeros(2, 0),
            DMatrix::zeros(2, 0),
        )
        .unwrap();
        assert_relative_eq!(upper.strong_monotonicity_modulus(), 0.0, epsilon = 1e-12);
    }
}
