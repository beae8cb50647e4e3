//! Affine variational inequalities `w ∈ M x + N_C(x)` over a polyhedron, solved by enumerating
//! the faces that can carry the normal component.
//!
//! Any solution has a multiplier supported on linearly independent active rows, so it is
//! enough to visit index sets `J` with independent `G_J`. On each one the system
//! `M x + G_Jᵀμ = w`, `G_J x = h_J`, `G x ≤ h`, `μ ≥ 0` is a feasibility LP.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::combinatorics;
use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpStatus};
use crate::polyhedra::Polyhedron;
use crate::report;
use crate::scalar::Real;

/// Largest number of candidate rows for the enumeration.
pub const AVI_ROW_LIMIT: usize = 16;

#[derive(Debug, Clone, Serialize)]
pub struct AviSolution<T: Real> {
    #[serde(serialize_with = "report::vec")]
    pub x: DVector<T>,
    /// multiplier per row of `G` (zero off the face)
    #[serde(serialize_with = "report::vec")]
    pub mu: DVector<T>,
    pub face: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionSet {
    Empty,
    Unique,
    Finite,
    Continuum,
}

#[derive(Debug, Clone, Serialize)]
pub struct AviSolutions<T: Real> {
    pub status: SolutionSet,
    pub solutions: Vec<AviSolution<T>>,
    pub faces_checked: usize,
}

impl<T: Real> AviSolutions<T> {
    pub fn unique(&self) -> Option<&DVector<T>> {
        (self.status == SolutionSet::Unique).then(|| &self.solutions[0].x)
    }
}

/// Restrict the search to `‖x − center‖_∞ ≤ radius`.
#[derive(Debug, Clone)]
pub struct Window<T: Real> {
    pub center: DVector<T>,
    pub radius: T,
}

struct FaceLp<T: Real> {
    a_ub: DMatrix<T>,
    b_ub: DVector<T>,
    a_eq: DMatrix<T>,
    b_eq: DVector<T>,
}

fn face_lp<T: Real>(m: &DMatrix<T>, w: &DVector<T>, c: &Polyhedron<T>, face: &[usize], win: Option<&Window<T>>) -> FaceLp<T> {
    let n = m.nrows();
    let k = face.len();
    let nv = n + k;
    let gj = linalg::select_rows(c.g(), face);
    let s = c.n_rows();
    let nbox = if win.is_some() { 2 * n } else { 0 };
    let mut a_ub = DMatrix::zeros(s + k + nbox, nv);
    let mut b_ub = DVector::zeros(s + k + nbox);
    a_ub.view_mut((0, 0), (s, n)).copy_from(c.g());
    b_ub.rows_mut(0, s).copy_from(c.h());
    for j in 0..k {
        a_ub[(s + j, n + j)] = -T::one();
    }
    if let Some(wd) = win {
        for i in 0..n {
            a_ub[(s + k + i, i)] = T::one();
            b_ub[s + k + i] = wd.center[i] + wd.radius;
            a_ub[(s + k + n + i, i)] = -T::one();
            b_ub[s + k + n + i] = wd.radius - wd.center[i];
        }
    }
    let mut a_eq = DMatrix::zeros(n + k, nv);
    let mut b_eq = DVector::zeros(n + k);
    a_eq.view_mut((0, 0), (n, n)).copy_from(m);
    a_eq.view_mut((0, n), (n, k)).copy_from(&gj.transpose());
    b_eq.rows_mut(0, n).copy_from(w);
    a_eq.view_mut((n, 0), (k, n)).copy_from(&gj);
    b_eq.rows_mut(n, k).copy_from(&linalg::select_entries(c.h(), face));
    FaceLp { a_ub, b_ub, a_eq, b_eq }
}

/// Rows that can be active somewhere in the window.
fn candidate_rows<T: Real>(c: &Polyhedron<T>, win: Option<&Window<T>>) -> Vec<usize> {
    (0..c.n_rows())
        .filter(|&i| match win {
            None => true,
            Some(wd) => {
                let gi = c.g().row(i);
                let reach = gi.dot(&wd.center.transpose()) + gi.iter().fold(T::zero(), |a, &v| a + v.abs()) * wd.radius;
                reach >= c.h()[i] - T::tol(1e-9)
            }
        })
        .collect()
}

/// All solutions of `w ∈ M x + N_C(x)` (inside the window when given).
///
/// The status is `Continuum` when some face carries a non-isolated solution.
pub fn solve_avi<T: Real>(m: &DMatrix<T>, w: &DVector<T>, c: &Polyhedron<T>, win: Option<&Window<T>>) -> Result<AviSolutions<T>> {
    let n = m.nrows();
    if m.ncols() != n || w.len() != n || c.dim() != n {
        return Err(Error::Shape("affine VI data".into()));
    }
    let rows = candidate_rows(c, win);
    if rows.len() > AVI_ROW_LIMIT {
        return Err(Error::SizeLimit(format!("{} candidate rows exceed {AVI_ROW_LIMIT}", rows.len())));
    }
    let tol = T::tol(1e-9);
    let mut solutions: Vec<AviSolution<T>> = Vec::new();
    let mut continuum = false;
    let mut checked = 0;
    for k in 0..=rows.len().min(n) {
        for sub in combinatorics::subsets_of_size(rows.len(), k) {
            let face: Vec<usize> = sub.iter().map(|&i| rows[i]).collect();
            let gj = linalg::select_rows(c.g(), &face);
            if k > 0 && linalg::rank(&gj, T::tol(1e-9)) < k {
                continue;
            }
            checked += 1;
            let f = face_lp(m, w, c, &face, win);
            let nv = n + k;
            let Some(z) = lp::feasible_point(&f.a_ub, &f.b_ub, &f.a_eq, &f.b_eq, nv) else { continue };
            let x = z.rows(0, n).into_owned();
            let mut mu = DVector::zeros(c.n_rows());
            for (j, &i) in face.iter().enumerate() {
                mu[i] = z[n + j].max(T::zero());
            }
            if !continuum && face_has_continuum(m, &gj, &f, &x, n) {
                continuum = true;
            }
            let scale = T::one() + x.amax();
            if !solutions.iter().any(|s| (&s.x - &x).amax() <= tol * scale) {
                solutions.push(AviSolution { x, mu, face });
            }
        }
    }
    let status = if continuum {
        SolutionSet::Continuum
    } else {
        match solutions.len() {
            0 => SolutionSet::Empty,
            1 => SolutionSet::Unique,
            _ => SolutionSet::Finite,
        }
    };
    Ok(AviSolutions { status, solutions, faces_checked: checked })
}

/// Whether the `x`-part of the face system is not a single point.
fn face_has_continuum<T: Real>(m: &DMatrix<T>, gj: &DMatrix<T>, f: &FaceLp<T>, x: &DVector<T>, n: usize) -> bool {
    let k = gj.nrows();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(m);
    kkt.view_mut((0, n), (n, k)).copy_from(&gj.transpose());
    kkt.view_mut((n, 0), (k, n)).copy_from(gj);
    if linalg::rank(&kkt, T::tol(1e-10)) == n + k {
        return false;
    }
    let tol = T::tol(1e-7) * (T::one() + x.amax());
    for i in 0..n {
        for sgn in [T::one(), -T::one()] {
            let mut c = DVector::zeros(n + k);
            c[i] = sgn;
            match lp::maximize(&c, &f.a_ub, &f.b_ub, &f.a_eq, &f.b_eq) {
                LpStatus::Optimal { value, .. } => {
                    if value - sgn * x[i] > tol {
                        return true;
                    }
                }
                LpStatus::Unbounded => return true,
                _ => {}
            }
        }
    }
    false
}

/// Farkas direction certifying `w ∉ cone(rows of G)`: `y = w − Π(w)` with `⟨y, gᵢ⟩ ≤ 0`,
/// `⟨y, w⟩ > 0`. `None` when `w` lies in the cone.
pub fn cone_separation<T: Real>(g: &DMatrix<T>, w: &DVector<T>) -> Option<DVector<T>> {
    let y = if g.nrows() == 0 { w.clone() } else { w - g.transpose() * linalg::nnls(&g.transpose(), w) };
    (y.norm() > T::tol(1e-10) * (T::one() + w.norm())).then_some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_vec(x.to_vec())
    }

    #[test]
    fn orthant_complementarity() {
        let c = Polyhedron::<f64>::nonneg_orthant(2);
        let m = DMatrix::identity(2, 2);
        let s = solve_avi(&m, &v(&[0.7, -0.3]), &c, None).unwrap();
        assert_eq!(s.status, SolutionSet::Unique);
        assert!((s.unique().unwrap() - v(&[0.7, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn zero_operator_cases() {
        let c = Polyhedron::<f64>::nonneg_orthant(2);
        let m = DMatrix::zeros(2, 2);
        let empty = solve_avi(&m, &v(&[0.1, 0.0]), &c, None).unwrap();
        assert_eq!(empty.status, SolutionSet::Empty);
        let y = cone_separation(&(-DMatrix::identity(2, 2)), &v(&[0.1, 0.0])).unwrap();
        assert!(y[0] > 0.0);
        let many = solve_avi(&m, &v(&[-0.1, -0.1]), &c, None).unwrap();
        assert_eq!(many.status, SolutionSet::Unique);
        let cont = solve_avi(&m, &v(&[-0.1, 0.0]), &c, None).unwrap();
        assert_eq!(cont.status, SolutionSet::Continuum);
    }

    #[test]
    fn nonmonotone_has_two_solutions() {
        // −x ∈ N_[−1,1](x) − w with w = 0: x ∈ {−1, 0, 1}
        let c = Polyhedron::from_box(&v(&[-1.0]), &v(&[1.0])).unwrap();
        let s = solve_avi(&DMatrix::from_element(1, 1, -1.0), &v(&[0.0]), &c, None).unwrap();
        assert_eq!(s.status, SolutionSet::Finite);
        assert_eq!(s.solutions.len(), 3);
        let win = Window { center: v(&[0.9]), radius: 0.2 };
        let local = solve_avi(&DMatrix::from_element(1, 1, -1.0), &v(&[0.0]), &c, Some(&win)).unwrap();
        assert_eq!(local.status, SolutionSet::Unique);
    }
}
