//! Minimum of a quadratic form over a polyhedral cone intersected with the unit sphere.

use nalgebra::{DMatrix, DVector};

use super::cone::{stack, PolyCone};
use crate::combinatorics;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Largest number of inequality rows handled exactly.
pub const CONE_MIN_LIMIT: usize = 12;

#[derive(Debug, Clone)]
pub struct ConeMin<T: Real> {
    /// `min uᵀHu / ‖u‖²` over the cone
    pub value: T,
    /// unit minimizer
    pub direction: DVector<T>,
    pub faces_checked: usize,
}

/// `min uᵀHu` over `{u : E u = 0, M u ≤ 0, ‖u‖ = 1}`; `None` when the cone is `{0}`.
///
/// Every minimizer is an eigenvector of `H` restricted to the subspace of some face, so
/// enumerating faces and checking sign feasibility of each restricted eigenspace is exact.
pub fn min_quadratic_on_cone<T: Real>(h: &DMatrix<T>, eq: &DMatrix<T>, ineq: &DMatrix<T>) -> Result<Option<ConeMin<T>>> {
    let n = h.nrows();
    let s = ineq.nrows();
    if s > CONE_MIN_LIMIT {
        return Err(Error::SizeLimit(format!("{s} cone inequalities exceed the exact limit {CONE_MIN_LIMIT}")));
    }
    let hs = linalg::sym(h);
    let eq = if eq.nrows() == 0 { DMatrix::zeros(0, n) } else { eq.clone() };
    let ineq = if s == 0 { DMatrix::zeros(0, n) } else { ineq.clone() };
    let tol = T::tol(1e-10);
    let eig_tol = T::tol(1e-9) * (T::one() + hs.amax());
    let mut best: Option<ConeMin<T>> = None;
    let mut checked = 0;
    for subset in combinatorics::power_set(&(0..s).collect::<Vec<_>>()) {
        let rows_s = linalg::select_rows(&ineq, &subset);
        let cons = stack(&eq, &rows_s, n);
        let z = if cons.nrows() == 0 { DMatrix::identity(n, n) } else { linalg::null_space(&cons, n, T::tol(1e-10)) };
        if z.ncols() == 0 {
            continue;
        }
        checked += 1;
        let rest: Vec<usize> = (0..s).filter(|i| !subset.contains(i)).collect();
        let m_rest = linalg::select_rows(&ineq, &rest) * &z;
        let hz = z.transpose() * &hs * &z;
        let (vals, vecs) = linalg::sym_eigen(&hz);
        let k = vals.len();
        let mut i = 0;
        while i < k {
            let mut j = i + 1;
            while j < k && (vals[j] - vals[i]).abs() <= eig_tol {
                j += 1;
            }
            let mu = vals[i];
            if best.as_ref().map_or(true, |b| mu < b.value) {
                let space = vecs.columns(i, j - i).into_owned();
                if let Some(y) = feasible_in_space(&m_rest, &space, tol) {
                    let u = &z * y;
                    let u = &u / u.norm();
                    // an unconstrained face keeps the eigenvalue itself
                    let value = if rest.is_empty() { mu } else { u.dot(&(&hs * &u)) };
                    best = Some(ConeMin { value, direction: u, faces_checked: 0 });
                }
            }
            i = j;
        }
    }
    Ok(best.map(|mut b| {
        b.faces_checked = checked;
        b
    }))
}

/// A nonzero `y ∈ range(space)` with `M y ≤ 0`, if one exists.
fn feasible_in_space<T: Real>(m: &DMatrix<T>, space: &DMatrix<T>, tol: T) -> Option<DVector<T>> {
    let k = space.ncols();
    if m.nrows() == 0 {
        return Some(space.column(0).into_owned());
    }
    if k == 1 {
        let y = space.column(0).into_owned();
        let my = m * &y;
        if my.max() <= tol {
            return Some(y);
        }
        if (-my).max() <= tol {
            return Some(-y);
        }
        return None;
    }
    let mc = m * space;
    let c = PolyCone::from_inequalities(mc, DMatrix::zeros(0, k), k);
    if let Some(r) = c.rays.first() {
        return Some(space * r);
    }
    if c.lineality.ncols() > 0 {
        return Some(space * c.lineality.column(0));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_is_min_eigenvalue() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -3.0]);
        let r = min_quadratic_on_cone(&h, &DMatrix::zeros(0, 2), &DMatrix::zeros(0, 2)).unwrap().unwrap();
        assert_relative_eq!(r.value, -3.0, epsilon = 1e-12);
    }

    #[test]
    fn orthant_copositivity() {
        // uᵀHu with H = [[1, -2], [-2, 1]] on R²₊: min at (1,1)/√2 = -1
        let h = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, -2.0, 1.0]);
        let m = -DMatrix::<f64>::identity(2, 2);
        let r = min_quadratic_on_cone(&h, &DMatrix::zeros(0, 2), &m).unwrap().unwrap();
        assert_relative_eq!(r.value, -1.0, epsilon = 1e-12);
        // H = [[1, 2], [2, 1]] is copositive: min 1 on the axes
        let h2 = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r2 = min_quadratic_on_cone(&h2, &DMatrix::zeros(0, 2), &m).unwrap().unwrap();
        assert_relative_eq!(r2.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trivial_cone_is_none() {
        let h = -DMatrix::<f64>::identity(2, 2);
        let e = DMatrix::<f64>::identity(2, 2);
        assert!(min_quadratic_on_cone(&h, &e, &DMatrix::zeros(0, 2)).unwrap().is_none());
        // u2 ≥ 0 and −u2 ≥ 0 with u1 = 0
        let e1 = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 0.0, 1.0]);
        assert!(min_quadratic_on_cone(&h, &e1, &m).unwrap().is_none());
    }
}
